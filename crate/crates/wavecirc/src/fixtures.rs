//! Published angle tables, embedded from the workspace `fixtures/` directory.

use serde::Deserialize;

use crate::circuits::{BoundaryAngles, Centering, CircuitError, CircuitFamily, CircuitSpec};

pub const TABLE_I: &str = include_str!("../../../fixtures/table1_daubechies.json");
pub const TABLE_II: &str = include_str!("../../../fixtures/table2_symlets.json");
pub const TABLE_III: &str = include_str!("../../../fixtures/table3_coiflets.json");
pub const TABLE_IV: &str = include_str!("../../../fixtures/table4_ternary.json");
pub const TABLE_VI: &str = include_str!("../../../fixtures/table6_ternary_lmh.json");
pub const TABLE_VII: &str = include_str!("../../../fixtures/table7_multiwavelet.json");
pub const TABLE_VIII: &str = include_str!("../../../fixtures/table8_quaternary.json");
pub const TABLE_IX: &str = include_str!("../../../fixtures/table9_boundary.json");
pub const TABLE_X: &str = include_str!("../../../fixtures/table10_biorthogonal.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleUnit {
    /// Angles printed as multiples of π.
    Pi,
    Rad,
    /// Shear parameters, not angles.
    Shear,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AngleSet {
    pub label: String,
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub moments: Option<usize>,
    #[serde(default)]
    pub centering: Option<Centering>,
    #[serde(default)]
    pub omega: Option<f64>,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AngleTable {
    pub table: String,
    pub title: String,
    pub family: CircuitFamily,
    pub unit: AngleUnit,
    pub sets: Vec<AngleSet>,
}

impl AngleTable {
    pub fn get(&self, label: &str) -> Option<&AngleSet> {
        self.sets.iter().find(|s| s.label == label)
    }

    pub fn by_order(&self, order: usize) -> Option<&AngleSet> {
        self.sets.iter().find(|s| s.order == Some(order))
    }

    pub fn radians(&self, set: &AngleSet) -> Vec<f64> {
        match self.unit {
            AngleUnit::Pi => set.params.iter().map(|p| p * std::f64::consts::PI).collect(),
            AngleUnit::Rad | AngleUnit::Shear => set.params.clone(),
        }
    }

    pub fn spec(&self, set: &AngleSet) -> Result<CircuitSpec, CircuitError> {
        let mut spec = CircuitSpec::new(self.family, self.radians(set))?;
        if set.centering.is_some() {
            spec.centering = set.centering;
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct BoundaryRow {
    pub z: usize,
    pub phi: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct BoundaryLimit {
    pub phi: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct BoundaryTable {
    pub table: String,
    pub title: String,
    pub bulk_over_pi: Vec<f64>,
    pub moments: usize,
    pub rows: Vec<BoundaryRow>,
    pub limit: BoundaryLimit,
}

impl BoundaryTable {
    pub fn bulk(&self) -> Vec<f64> {
        self.bulk_over_pi.iter().map(|p| p * std::f64::consts::PI).collect()
    }

    pub fn angles(&self) -> BoundaryAngles {
        BoundaryAngles {
            phi: self.rows.iter().map(|r| r.phi).collect(),
            sigma: self.rows.iter().map(|r| r.sigma).collect(),
        }
    }
}

fn parse<T: for<'de> Deserialize<'de>>(raw: &str) -> T {
    serde_json::from_str(raw).expect("embedded fixture is valid JSON")
}

pub fn daubechies() -> AngleTable {
    parse(TABLE_I)
}

pub fn symlets() -> AngleTable {
    parse(TABLE_II)
}

pub fn coiflets() -> AngleTable {
    parse(TABLE_III)
}

pub fn ternary_max_moments() -> AngleTable {
    parse(TABLE_IV)
}

pub fn ternary_lmh() -> AngleTable {
    parse(TABLE_VI)
}

pub fn multiwavelet() -> AngleTable {
    parse(TABLE_VII)
}

pub fn quaternary() -> AngleTable {
    parse(TABLE_VIII)
}

pub fn boundary() -> BoundaryTable {
    parse(TABLE_IX)
}

pub fn biorthogonal() -> AngleTable {
    parse(TABLE_X)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_table_parses() {
        let tables = [
            daubechies(),
            symlets(),
            coiflets(),
            ternary_max_moments(),
            ternary_lmh(),
            multiwavelet(),
            quaternary(),
            biorthogonal(),
        ];
        for t in &tables {
            for s in &t.sets {
                t.spec(s).unwrap();
            }
        }
        let ids: Vec<&str> = tables.iter().map(|t| t.table.as_str()).collect();
        assert_eq!(ids, ["I", "II", "III", "IV", "VI", "VII", "VIII", "X"]);
        let b = boundary();
        assert_eq!(b.table, "IX");
        assert_eq!(b.rows.len(), 12);
    }

    #[test]
    fn d4_is_five_twelfths_and_one_sixth() {
        let t = daubechies();
        let r = t.radians(t.by_order(2).unwrap());
        assert!((r[0] - 5.0 * std::f64::consts::PI / 12.0).abs() < 1e-15);
        assert!((r[1] - std::f64::consts::PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn ternary_lmh_centerings() {
        let t = ternary_lmh();
        let c: Vec<_> = t.sets.iter().map(|s| t.spec(s).unwrap().centering).collect();
        assert_eq!(c, [Some(Centering::Site), Some(Centering::Edge), Some(Centering::Edge)]);
    }
}
