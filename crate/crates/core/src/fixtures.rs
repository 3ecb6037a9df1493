//! Bundled example maps with their analysis parameters.

use crate::linalg::ToleranceConfig;
use crate::quadmap::{MapError, QuadraticMap};

#[derive(Debug, Clone)]
pub struct Example {
    pub id: u8,
    pub name: &'static str,
    pub json: &'static str,
    /// Definite direction used for the convexity cut, if the map admits one.
    pub c_plus: Option<&'static [f64]>,
    /// Initial incumbent for `z_max`.
    pub z_guess: Option<f64>,
    /// Number of sampled directions for `z_max`.
    pub restarts: usize,
    pub seed: u64,
}

impl Example {
    pub fn map(&self) -> Result<QuadraticMap, MapError> {
        QuadraticMap::from_json_str(self.json, &ToleranceConfig::default())
    }

    /// `c+` normalized to unit length.
    pub fn unit_c_plus(&self) -> Option<Vec<f64>> {
        self.c_plus.and_then(crate::linalg::rnormalize)
    }
}

const S2: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub const EXAMPLES: [Example; 10] = [
    Example {
        id: 1,
        name: "real 3x3, three flat edges",
        json: include_str!("../fixtures/example01.json"),
        c_plus: Some(&[0.0, 0.0, 1.0]),
        z_guess: None,
        restarts: 60,
        seed: 1,
    },
    Example {
        id: 2,
        name: "real 3x3, single flat edge",
        json: include_str!("../fixtures/example02.json"),
        c_plus: Some(&[2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0]),
        z_guess: None,
        restarts: 60,
        seed: 2,
    },
    Example {
        id: 3,
        name: "complex power flow, three buses",
        json: include_str!("../fixtures/example03.json"),
        c_plus: Some(&[S2, S2, 0.0, 0.0]),
        z_guess: None,
        restarts: 60,
        seed: 3,
    },
    Example {
        id: 4,
        name: "complex power flow, two generators",
        json: include_str!("../fixtures/example04.json"),
        c_plus: Some(&[0.7991, -0.3533, 0.3924, 0.2876]),
        z_guess: Some(1.7901),
        restarts: 60,
        seed: 4,
    },
    Example {
        id: 5,
        name: "real 4x4 with loop and interval components",
        json: include_str!("../fixtures/example05.json"),
        c_plus: Some(&[1.0, 0.0, 0.0, 0.0]),
        z_guess: None,
        restarts: 100,
        seed: 5,
    },
    Example {
        id: 6,
        name: "real 4x4 dense positive data",
        json: include_str!("../fixtures/example06.json"),
        c_plus: Some(&[1.0, 0.0, 0.0, 0.0]),
        z_guess: None,
        restarts: 100,
        seed: 6,
    },
    Example {
        id: 7,
        name: "real 5x5 integer data",
        json: include_str!("../fixtures/example07.json"),
        c_plus: Some(&[0.1326, -0.3859, 0.1932, -0.6408, 0.6209]),
        z_guess: Some(137.5),
        restarts: 100,
        seed: 7,
    },
    Example {
        id: 8,
        name: "complex 3x3, five components",
        json: include_str!("../fixtures/example08.json"),
        c_plus: Some(&[0.0, 0.0, 0.0, 0.0, 1.0]),
        z_guess: Some(1.0),
        restarts: 300,
        seed: 8,
    },
    Example {
        id: 9,
        name: "complex 3x3, six components",
        json: include_str!("../fixtures/example09.json"),
        c_plus: Some(&[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
        z_guess: Some(0.1),
        restarts: 100,
        seed: 9,
    },
    Example {
        id: 10,
        name: "real homogeneous 4x4",
        json: include_str!("../fixtures/example10.json"),
        c_plus: Some(&[0.0, 0.0, 0.0, 1.0]),
        z_guess: None,
        restarts: 60,
        seed: 10,
    },
];

/// Real homogeneous map with two components; its image is convex.
pub const CONVEX_HOMOGENEOUS_M2: &str = include_str!("../fixtures/convex_homogeneous_m2.json");
/// `f(x) = (|x|^2, 2 x1, 2 x2)`; its image is a convex paraboloid.
pub const CONVEX_PARABOLOID: &str = include_str!("../fixtures/convex_paraboloid.json");

pub fn example(id: u8) -> Option<&'static Example> {
    EXAMPLES.iter().find(|e| e.id == id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixtures_load() {
        for e in &EXAMPLES {
            let map = e.map().unwrap_or_else(|err| panic!("example {}: {err}", e.id));
            if let Some(c) = e.c_plus {
                assert_eq!(c.len(), map.m());
            }
        }
        let tol = ToleranceConfig::default();
        QuadraticMap::from_json_str(CONVEX_HOMOGENEOUS_M2, &tol).unwrap();
        QuadraticMap::from_json_str(CONVEX_PARABOLOID, &tol).unwrap();
        assert!(example(11).is_none());
    }
}
