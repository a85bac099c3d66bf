//! JSON wire format for game descriptions.
//!
//! Matrices are dense row-major decimal arrays; unbounded interval ends are
//! `null`. A potential game carries the unified operator and canonical
//! function under the optional top-level `potential` key.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    CanonicalFunction, CanonicalKind, GameSpec, IntervalBox, PlayerSpec, PotentialSpec,
    QuadraticComponent, QuadraticOperator,
};
use crate::error::{Error, Result};
use crate::set::ConstraintSet;

#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixDoc {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        MatrixDoc { rows: m.nrows(), cols: m.ncols(), data }
    }

    fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Config(format!(
                "matrix payload has {} entries, expected {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ComponentDoc {
    pub q: MatrixDoc,
    pub l: Vec<f64>,
    pub c: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OperatorDoc {
    pub components: Vec<ComponentDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ThetaDoc {
    pub lo: Vec<Option<f64>>,
    pub hi: Vec<Option<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsiDoc {
    SumSquares { dim: usize, theta: Option<ThetaDoc> },
    ScaledLogistic { beta1: f64, dim: usize, theta: Option<ThetaDoc> },
    NegLog { dim: usize, theta: Option<ThetaDoc> },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlayerDoc {
    pub omega: ConstraintSet,
    pub lambda: OperatorDoc,
    pub psi: PsiDoc,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PotentialDoc {
    pub lambda: OperatorDoc,
    pub psi: PsiDoc,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GameDoc {
    pub players: Vec<PlayerDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialDoc>,
}

fn theta_to_doc(b: &IntervalBox) -> ThetaDoc {
    let opt = |v: f64| if v.is_finite() { Some(v) } else { None };
    ThetaDoc {
        lo: b.lo.iter().map(|v| opt(*v)).collect(),
        hi: b.hi.iter().map(|v| opt(*v)).collect(),
    }
}

fn theta_from_doc(d: &ThetaDoc, dim: usize, kind: &CanonicalKind) -> Result<IntervalBox> {
    if d.lo.len() != dim || d.hi.len() != dim {
        return Err(Error::Config("theta bounds do not match psi dimension".into()));
    }
    let lo_default = match kind {
        CanonicalKind::NegLog => 0.0,
        _ => f64::NEG_INFINITY,
    };
    let lo: Vec<f64> = d.lo.iter().map(|v| v.unwrap_or(lo_default)).collect();
    let hi: Vec<f64> = d.hi.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
    IntervalBox::new(lo, hi)
}

fn psi_to_doc(f: &CanonicalFunction) -> PsiDoc {
    let theta = Some(theta_to_doc(f.theta()));
    match f.kind() {
        CanonicalKind::SumSquares => PsiDoc::SumSquares { dim: f.dim(), theta },
        CanonicalKind::ScaledLogistic { beta1 } => {
            PsiDoc::ScaledLogistic { beta1, dim: f.dim(), theta }
        }
        CanonicalKind::NegLog => PsiDoc::NegLog { dim: f.dim(), theta },
    }
}

fn psi_from_doc(d: &PsiDoc) -> Result<CanonicalFunction> {
    let (kind, dim, theta) = match d {
        PsiDoc::SumSquares { dim, theta } => (CanonicalKind::SumSquares, *dim, theta),
        PsiDoc::ScaledLogistic { beta1, dim, theta } => {
            (CanonicalKind::ScaledLogistic { beta1: *beta1 }, *dim, theta)
        }
        PsiDoc::NegLog { dim, theta } => (CanonicalKind::NegLog, *dim, theta),
    };
    match theta {
        Some(t) => CanonicalFunction::new(kind, theta_from_doc(t, dim, &kind)?),
        None => Ok(CanonicalFunction::with_default_domain(kind, dim)),
    }
}

fn operator_to_doc(op: &QuadraticOperator) -> OperatorDoc {
    OperatorDoc {
        components: op
            .components()
            .iter()
            .map(|c| ComponentDoc {
                q: MatrixDoc::from_matrix(&c.q),
                l: c.l.iter().copied().collect(),
                c: c.c,
            })
            .collect(),
    }
}

fn operator_from_doc(d: &OperatorDoc) -> Result<QuadraticOperator> {
    let components = d
        .components
        .iter()
        .map(|c| {
            Ok(QuadraticComponent::new(
                c.q.to_matrix()?,
                DVector::from_column_slice(&c.l),
                c.c,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    QuadraticOperator::new(components)
}

pub fn game_to_doc(game: &GameSpec) -> GameDoc {
    GameDoc {
        players: game
            .players()
            .iter()
            .map(|p| PlayerDoc {
                omega: p.omega.clone(),
                lambda: operator_to_doc(&p.lambda),
                psi: psi_to_doc(&p.psi),
            })
            .collect(),
        potential: game.potential().map(|pot| PotentialDoc {
            lambda: operator_to_doc(&pot.lambda),
            psi: psi_to_doc(&pot.psi),
        }),
    }
}

pub fn game_from_doc(doc: &GameDoc) -> Result<GameSpec> {
    let players = doc
        .players
        .iter()
        .map(|p| {
            Ok(PlayerSpec {
                omega: p.omega.clone(),
                lambda: operator_from_doc(&p.lambda)?,
                psi: psi_from_doc(&p.psi)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let potential = doc
        .potential
        .as_ref()
        .map(|pot| {
            Ok::<_, Error>(PotentialSpec {
                lambda: operator_from_doc(&pot.lambda)?,
                psi: psi_from_doc(&pot.psi)?,
            })
        })
        .transpose()?;
    GameSpec::new(players, potential)
}

impl GameSpec {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&game_to_doc(self))?)
    }

    pub fn from_json(s: &str) -> Result<GameSpec> {
        let doc: GameDoc = serde_json::from_str(s)?;
        game_from_doc(&doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::builders;
    use crate::game::StrategyProfile;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_preserves_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for game in [
            builders::remark1_interval_instance(0.0, 3.0, 2.0),
            builders::build_sensor_game(4, 9, (5.0, 10.0), (-6.0, 6.0), true).unwrap(),
            builders::build_logsumexp_game(7),
        ] {
            let json = game.to_json().unwrap();
            let back = GameSpec::from_json(&json).unwrap();
            for _ in 0..10 {
                let blocks: Vec<_> = (0..game.player_count())
                    .map(|i| game.player(i).omega.sample(&mut rng))
                    .collect();
                let x = StrategyProfile::from_blocks(&blocks);
                for i in 0..game.player_count() {
                    let a = game.eval_lambda(i, &x).unwrap();
                    let b = back.eval_lambda(i, &x).unwrap();
                    assert!((a - b).norm() < 1e-12);
                    let ja = game.eval_payoff(i, &x);
                    let jb = back.eval_payoff(i, &x);
                    match (ja, jb) {
                        (Ok(a), Ok(b)) => assert!((a - b).abs() < 1e-12),
                        (Err(_), Err(_)) => {}
                        _ => panic!("payoff domain disagreement after roundtrip"),
                    }
                }
            }
            assert_eq!(game.is_potential(), back.is_potential());
        }
        let _ = rng.gen::<f64>();
    }

    #[test]
    fn unbounded_theta_serializes_as_null() {
        let game = builders::build_logsumexp_game(7);
        let json = game.to_json().unwrap();
        let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(doc["players"].is_array());
    }
}
