//! Temporary development probe (removed before release).

use dualnash::duality::{certify, eplus_all, CertifyOptions};
use dualnash::harness::{builders, metrics, oracle};
use dualnash::solver::{default_bundle, estimate_constants, solve, Method, Schedule, SolverConfig};
use dualnash::vi::{monotonicity_probe, DualProfile, JointPoint};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "toy".into());
    match which.as_str() {
        "toy" => toy(),
        "sm" => strongly_monotone(),
        "lse" => logsumexp(),
        "sensor" => sensor(),
        "toytrace" => toy_trace(),
        "sensorgap" => sensor_gap(),
        _ => eprintln!("unknown probe"),
    }
}

fn toy() {
    let game = builders::remark1_toy();
    let cands = oracle::brute_force_ne(&game, 101).unwrap();
    for c in cands.iter().take(6) {
        println!("cand x = {:?} gap = {:.3e}", c.x.as_vector().as_slice(), c.gap);
    }
    let best = oracle::polish(&game, &cands[0].x, 300, 0.02).unwrap();
    println!("polished best = {:?}", best.as_vector().as_slice());
    let sigma = DualProfile::from_blocks(&game, game.natural_dual(&best).unwrap()).unwrap();
    println!("natural dual = {:?}", sigma.blocks());
    let cert = certify(&game, &best, &sigma, &CertifyOptions::default()).unwrap();
    println!(
        "verdict {:?} vi_res {:.3e} r {:?} member {:?}",
        cert.verdict, cert.vi_residual, cert.duality_residuals, cert.eplus_membership
    );

    // Alg1 run
    let eplus = eplus_all(&game, 1e-2).unwrap();
    let bundle = default_bundle(&game, &eplus).unwrap();
    let consts = estimate_constants(&game, &bundle, &eplus, 200, 3).unwrap();
    println!("constants {consts:?}");
    let cfg = SolverConfig {
        method: Method::Alg1,
        schedule: Schedule::InvSqrt { c: 0.3 },
        max_iters: 8000,
        t_tol: 0.0,
        ..Default::default()
    };
    let res = solve(&game, &bundle, &eplus, &cfg, None, None).unwrap();
    println!(
        "alg1 final x = {:?} verdict {:?} vi {:.3e} r {:?}",
        res.x.as_vector().as_slice(),
        res.certificate.verdict,
        res.certificate.vi_residual,
        res.certificate.duality_residuals
    );
    println!("dist to oracle = {:.3e}", (res.x.as_vector() - best.as_vector()).norm());
}

fn strongly_monotone() {
    let game = builders::strongly_monotone_instance();
    let z_star = builders::strongly_monotone_solution(&game);
    let eplus = eplus_all(&game, 1e-2).unwrap();
    println!("eplus repr: {:?}", eplus.iter().map(|e| (e.is_empty(), format!("{:?}", e.repr()))).collect::<Vec<_>>());
    let bundle = default_bundle(&game, &eplus).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let kappa_emp = monotonicity_probe(&game, &eplus, 400, &mut rng).unwrap();
    println!("empirical kappa = {kappa_emp:.5}");
    let cert = certify(&game, &z_star.x, &z_star.sigma, &CertifyOptions::default()).unwrap();
    println!("z* verdict {:?} vi {:.3e}", cert.verdict, cert.vi_residual);

    let cfg = SolverConfig {
        method: Method::Alg1,
        schedule: Schedule::HarmonicKappa { kappa: kappa_emp },
        max_iters: 3000,
        t_tol: 0.0,
        record_every: 1,
        ..Default::default()
    };
    let res = solve(&game, &bundle, &eplus, &cfg, None, Some(&z_star)).unwrap();
    let series: Vec<(f64, f64)> = res
        .rows
        .iter()
        .filter(|r| r.k >= 100 && r.k <= 2000)
        .map(|r| (r.k as f64, r.dist_sq.unwrap()))
        .collect();
    let slope = metrics::loglog_slope(&series, 1.0).unwrap();
    println!("dist² slope over [100,2000] = {slope:.4}");
    for k in [1usize, 10, 100, 500, 1000, 2000, 3000] {
        if let Some(r) = res.rows.iter().find(|r| r.k == k) {
            println!("  k={k} dist²={:.5e} alpha={:.4e}", r.dist_sq.unwrap(), r.alpha);
        }
    }

    // ODE probe
    use dualnash::ode;
    let star_state = ode::equilibrium_from_pair(&game, &bundle, &z_star.x, &z_star.sigma).unwrap();
    let init = ode::default_init(&game, &bundle).unwrap();
    for t_end in [25.0, 60.0, 120.0, 240.0] {
        let trace = ode::integrate(&game, &bundle, init.clone(), 0.01, t_end, 10, Some(&z_star)).unwrap();
        let fit = ode::fit_exponential_rate(&trace, None).unwrap();
        println!("t_end={t_end}: ode lambda = {:.5} r2 = {:.6} dist_end = {:.3e}",
            fit.lambda_hat, fit.r_squared, trace.samples.last().unwrap().dist.unwrap());
    }
    let trace = ode::integrate(&game, &bundle, init.clone(), 0.01, 60.0, 10, Some(&z_star)).unwrap();
    let fit = ode::fit_exponential_rate(&trace, None).unwrap();
    println!("ode lambda = {:.4} r2 = {:.6}", fit.lambda_hat, fit.r_squared);
    let v1 = ode::lyapunov_along_flow(&game, &bundle, init, &star_state, 0.01, 60.0).unwrap();
    let mono = v1.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-8);
    println!("V1 monotone: {mono}; V1(0) = {:.4e}, V1(end) = {:.4e}", v1[0].1, v1.last().unwrap().1);
}

fn logsumexp() {
    let seed: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(7);
    let game = builders::build_logsumexp_game(seed);
    let p = builders::logsumexp_params(seed);
    println!("beta2 = {:.4}", p.beta2);
    let cands = oracle::brute_force_ne(&game, 121).unwrap();
    for c in cands.iter().take(8) {
        println!("cand x = {:?} gap = {:.4e}", c.x.as_vector().as_slice(), c.gap);
    }
    // Stationary points via multistart gradient play
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let starts: Vec<_> = (0..40)
        .map(|_| {
            dualnash::game::StrategyProfile::from_blocks(&[
                game.player(0).omega.sample(&mut rng),
                game.player(1).omega.sample(&mut rng),
            ])
        })
        .collect();
    let stats = oracle::stationary_points(&game, &starts, 4000, 0.01).unwrap();
    let grids: Vec<Vec<DVector<f64>>> = vec![];
    let _ = grids;
    for s in &stats {
        let g = oracle::stationarity_residual(&game, s).unwrap();
        println!(
            "stationary x = {:?} residual {:.2e} J = ({:.4}, {:.4})",
            s.as_vector().as_slice(),
            g,
            game.eval_payoff(0, s).unwrap(),
            game.eval_payoff(1, s).unwrap()
        );
    }
    let eplus = eplus_all(&game, 1e-2).unwrap();
    println!("eplus empty: {:?}", eplus.iter().map(|e| e.is_empty()).collect::<Vec<_>>());
    for e in &eplus {
        println!("  repr {:?}", e.repr());
    }
    // certify the best candidate
    let best = oracle::polish(&game, &cands[0].x, 500, 0.01).unwrap();
    let sigma = DualProfile::from_blocks(&game, game.natural_dual(&best).unwrap()).unwrap();
    let cert = certify(&game, &best, &sigma, &CertifyOptions::default()).unwrap();
    println!(
        "best {:?} verdict {:?} vi {:.3e} member {:?}",
        best.as_vector().as_slice(),
        cert.verdict,
        cert.vi_residual,
        cert.eplus_membership
    );
    // Alg1 from several inits
    let bundle = default_bundle(&game, &eplus).unwrap();
    for iseed in 0..10u64 {
        let init = dualnash::harness::seeded_start(&game, &eplus, iseed).unwrap();
        let cfg = SolverConfig {
            method: Method::Alg1,
            schedule: Schedule::HarmonicKappa { kappa: 1.0 }, // alpha = 2/(k+1)
            max_iters: 20000,
            t_tol: 0.0,
            ..Default::default()
        };
        let res = solve(&game, &bundle, &eplus, &cfg, Some(init.clone()), None).unwrap();
        println!(
            "alg1 init [{:+.2}, {:+.2}] -> x [{:+.4}, {:+.4}] verdict {:?} vi {:.2e}",
            init.x.as_vector()[0], init.x.as_vector()[1],
            res.x.as_vector()[0], res.x.as_vector()[1],
            res.certificate.verdict,
            res.certificate.vi_residual,
        );
        for m in [Method::Gd, Method::Omd, Method::Eg] {
            let cfgb = SolverConfig { method: m, max_iters: 4000, ..cfg.clone() };
            let resb = solve(&game, &bundle, &eplus, &cfgb, Some(init.clone()), None).unwrap();
            println!(
                "  {:?} -> x [{:+.4}, {:+.4}] verdict {:?}",
                m, resb.x.as_vector()[0], resb.x.as_vector()[1], resb.certificate.verdict
            );
        }
    }
}

fn sensor_gap() {
    use dualnash::duality::complementary_value;
    let kx: f64 = std::env::args().nth(2).and_then(|v| v.parse().ok()).unwrap_or(1e-2);
    let game = builders::build_sensor_game(10, 1, (5.0, 10.0), (-6.0, 6.0), true).unwrap();
    let truth = builders::sensor_ground_truth(10, 1, (5.0, 10.0), (-6.0, 6.0)).unwrap();
    let eplus = eplus_all(&game, kx).unwrap();
    let bundle = default_bundle(&game, &eplus).unwrap();
    // Oracle: long run with a schedule that converges the last iterate.
    let cfg = SolverConfig {
        method: Method::Alg1Potential,
        schedule: Schedule::InvSqrt { c: 0.12 },
        max_iters: 120_000,
        t_tol: 0.0,
        record_every: 120_000,
        ..Default::default()
    };
    let cfg = SolverConfig { kappa_x: kx, ..cfg };
    let res = solve(&game, &bundle, &eplus, &cfg, None, None).unwrap();
    println!("kx={kx} oracle vi residual = {:.3e} oracle MLE = {:.4}", res.certificate.vi_residual, metrics::mle(&res.x, &truth).unwrap());
    let z_star = JointPoint::new(res.x.clone(), res.sigma.clone());
    // Pinned-schedule run, gap along averaged iterates.
    let cfg2 = SolverConfig {
        method: Method::Alg1Potential,
        schedule: Schedule::InvSqrt { c: 0.0637 },
        max_iters: 5000,
        t_tol: 0.0,
        record_every: 1,
        kappa_x: kx,
        ..Default::default()
    };
    for start in ["corner", "corner2", "spread"] {
        let blocks: Vec<nalgebra::DVector<f64>> = (0..10)
            .map(|i| {
                let t = i as f64 * 0.07;
                match start {
                    "corner" => nalgebra::DVector::from_vec(vec![5.4 - t, -5.4 + t]),
                    "corner2" => nalgebra::DVector::from_vec(vec![-5.2 + t, -5.2 - t + 0.7]),
                    _ => nalgebra::DVector::from_vec(vec![5.0 - 1.1 * t, 5.0 - 0.9 * t]),
                }
            })
            .collect();
        let x0 = dualnash::game::StrategyProfile::from_blocks(&blocks);
        let sig0 = dualnash::solver::dual_start(&game, &eplus, &x0).unwrap();
        let init = JointPoint::new(x0, dualnash::vi::DualProfile::from_blocks(&game, sig0).unwrap());
        let res2 = solve(&game, &bundle, &eplus, &cfg2, Some(init), Some(&z_star)).unwrap();
        let series: Vec<(f64, f64)> = res2
            .rows
            .iter()
            .filter(|r| r.k >= 100 && r.gap.map_or(false, |g| g > 0.0))
            .map(|r| (r.k as f64, r.gap.unwrap()))
            .collect();
        let slope = metrics::loglog_slope(&series, 1.0).unwrap();
        let early: Vec<_> = series.iter().cloned().filter(|(k, _)| *k <= 1000.0).collect();
        let late: Vec<_> = series.iter().cloned().filter(|(k, _)| *k >= 1000.0).collect();
        println!(
            "{start}: slope={slope:.4} early={:.4} late={:.4} gap100={:.2} gap5000={:.3}",
            metrics::loglog_slope(&early, 1.0).unwrap(),
            metrics::loglog_slope(&late, 1.0).unwrap(),
            series.first().unwrap().1,
            series.last().unwrap().1
        );
    }
}

fn sensor() {
    let game = builders::build_sensor_game(10, 1, (5.0, 10.0), (-6.0, 6.0), true).unwrap();
    let truth = builders::sensor_ground_truth(10, 1, (5.0, 10.0), (-6.0, 6.0)).unwrap();
    let eplus = eplus_all(&game, 1e-2).unwrap();
    println!("eplus empty: {}", eplus[0].is_empty());
    let bundle = default_bundle(&game, &eplus).unwrap();
    for c in [0.0637f64, 0.12] {
        for iseed in [11u64, 22, 33] {
            let init = dualnash::harness::seeded_start(&game, &eplus, iseed).unwrap();
            let cfg = SolverConfig {
                method: Method::Alg1Potential,
                schedule: Schedule::InvSqrt { c },
                max_iters: 5000,
                t_tol: 0.0,
                checkpoints: vec![5, 50, 200, 1000, 5000],
                ..Default::default()
            };
            let res = solve(&game, &bundle, &eplus, &cfg, Some(init), None).unwrap();
            print!("c={c} init {iseed}: ");
            for (k, x) in &res.snapshots {
                print!("mle@{k} = {:.4}  ", metrics::mle(x, &truth).unwrap());
            }
            println!("vi={:.2e}", res.certificate.vi_residual);
        }
    }
}

fn toy_trace() {
    let game = builders::remark1_toy();
    let eplus = eplus_all(&game, 1e-2).unwrap();
    let bundle = default_bundle(&game, &eplus).unwrap();
    let mut z = dualnash::solver::default_start(&game, &eplus).unwrap();
    let mut x = z.x.clone();
    let mut s = z.sigma.blocks();
    for k in 1..=40usize {
        let alpha = 2.0 / (0.2 * (k as f64 + 1.0));
        let (xn, sn) = dualnash::solver::step_general(&game, &bundle, &x, &s, alpha).unwrap();
        x = xn; s = sn;
        if k <= 12 || k % 10 == 0 {
            println!("k={k} alpha={alpha:.3} x={:?} s_edge=({:.3},{:.3}) s_anchor=({:.3},{:.3})",
                x.as_vector().as_slice(), s[0][0], s[1][0], s[0][1], s[1][1]);
        }
    }
    z.x = x; // silence unused
    let _ = z;
}
