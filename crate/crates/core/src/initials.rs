//! Starting fields for the descent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryField, Grid, Region};
use crate::site::Atom;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    /// Union of the atoms' σ-balls.
    Tight,
    /// Every cell solute.
    Loose,
}

impl std::str::FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tight" => Ok(InitKind::Tight),
            "loose" => Ok(InitKind::Loose),
            other => Err(Error::Config(format!("unknown initial kind {other:?} (expected tight or loose)"))),
        }
    }
}

impl InitKind {
    pub fn build(self, grid: Grid, atoms: &[Atom]) -> Result<BinaryField> {
        match self {
            InitKind::Tight => tight_initial(grid, atoms),
            InitKind::Loose => Ok(loose_initial(grid)),
        }
    }
}

pub fn loose_initial(grid: Grid) -> BinaryField {
    BinaryField::filled(grid, Region::Solute)
}

/// Cell is solute iff its center lies within σ_j of some atom j.
pub fn tight_initial(grid: Grid, atoms: &[Atom]) -> Result<BinaryField> {
    if atoms.is_empty() {
        return Err(Error::Input("tight initial needs at least one atom".into()));
    }
    let field = BinaryField::from_fn(grid, |x| {
        let inside = atoms.iter().any(|a| {
            let d2: f64 = (0..3).map(|k| (x[k] - a.position[k]).powi(2)).sum();
            d2 <= a.sigma * a.sigma
        });
        if inside {
            Region::Solute
        } else {
            Region::Solvent
        }
    });
    if field.solute_count() == 0 {
        log::warn!("tight initial has no solute cells; every σ-ball falls between cell centers");
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::connected_components;
    use proptest::prelude::*;

    fn atom(p: [f64; 3], sigma: f64) -> Atom {
        Atom::new(p, 0.0, sigma, 0.1).unwrap()
    }

    #[test]
    fn loose_is_one_block() {
        let g = Grid::new(2.0, 7).unwrap();
        let f = loose_initial(g);
        assert_eq!(f.solute_count(), 343);
        assert_eq!(connected_components(&f, Region::Solute).count, 1);
    }

    #[test]
    fn digital_ball() {
        // h = 1 with cell centers at half-integers; count (i+½)² + (j+½)² + (k+½)² ≤ 4.
        let g = Grid::new(5.0, 10).unwrap();
        let f = tight_initial(g, &[atom([0.0; 3], 2.0)]).unwrap();
        let mut expected = 0;
        for i in -5..5 {
            for j in -5..5 {
                for k in -5..5 {
                    let c = |v: i32| v as f64 + 0.5;
                    if c(i).powi(2) + c(j).powi(2) + c(k).powi(2) <= 4.0 {
                        expected += 1;
                    }
                }
            }
        }
        assert_eq!(f.solute_count(), expected);
        assert_eq!(expected, 32);
    }

    #[test]
    fn disjoint_balls_and_degenerate_cases() {
        let g = Grid::new(5.0, 20).unwrap();
        let h = g.h();
        let d = 1.0 + 1.0 + 2.0 * h * 3f64.sqrt() + 0.1;
        let f = tight_initial(g, &[atom([-d / 2.0, 0.0, 0.0], 1.0), atom([d / 2.0, 0.0, 0.0], 1.0)]).unwrap();
        assert_eq!(connected_components(&f, Region::Solute).count, 2);

        // Atom on a grid vertex, σ < h/2: no center within reach.
        let tiny = tight_initial(g, &[atom([0.0; 3], 0.2)]).unwrap();
        assert_eq!(tiny.solute_count(), 0);
        assert!(tight_initial(g, &[]).is_err());
    }

    #[test]
    fn init_kind_names() {
        assert_eq!("tight".parse::<InitKind>().unwrap(), InitKind::Tight);
        assert_eq!("loose".parse::<InitKind>().unwrap(), InitKind::Loose);
        assert!("wet".parse::<InitKind>().is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_sigma(
            x in -2.0..2.0f64, y in -2.0..2.0f64, s1 in 0.2..2.5f64, grow in 0.0..1.0f64,
        ) {
            let g = Grid::new(3.0, 12).unwrap();
            let other = atom([1.0, -0.5, 0.3], 0.9);
            let small = tight_initial(g, &[atom([x, y, 0.0], s1), other.clone()]).unwrap();
            let big = tight_initial(g, &[atom([x, y, 0.0], s1 + grow), other]).unwrap();
            for l in 0..g.cell_count() {
                prop_assert!(!small.is_solute(l) || big.is_solute(l));
            }
        }
    }
}
