//! Observations, covariate standardization and simulated potential outcomes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether the treatment column is validated as binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreatmentKind {
    Binary,
    /// Real-valued treatment (e.g. a funding amount). Regressions run unchanged.
    Continuous,
}

/// A sample `{(Y_i, X_i, D_i, Z_i)}` with continuous and discrete covariates.
///
/// Continuous covariates are stored row-major (`n × p_cont`), as are the
/// integer-coded discrete covariates (`n × p_disc`). A dataset that went
/// through [`standardize`] carries the map back to raw units, which the APS
/// engine uses to evaluate rules defined on the raw scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    d: Vec<f64>,
    z: Vec<f64>,
    x_cont: Vec<f64>,
    p_cont: usize,
    x_disc: Vec<i64>,
    p_disc: usize,
    cont_names: Vec<String>,
    disc_names: Vec<String>,
    aux: Vec<(String, Vec<f64>)>,
    treatment: TreatmentKind,
    scaling: Option<StandardizationMap>,
}

/// Builder for [`Dataset`]; all validation happens in [`DatasetBuilder::build`].
#[derive(Debug, Clone)]
pub struct DatasetBuilder {
    y: Vec<f64>,
    d: Vec<f64>,
    z: Vec<f64>,
    x_cont: Vec<f64>,
    p_cont: usize,
    x_disc: Vec<i64>,
    p_disc: usize,
    cont_names: Option<Vec<String>>,
    disc_names: Option<Vec<String>>,
    aux: Vec<(String, Vec<f64>)>,
    treatment: TreatmentKind,
}

impl DatasetBuilder {
    pub fn continuous(mut self, x_cont: Vec<f64>, p_cont: usize) -> Self {
        self.x_cont = x_cont;
        self.p_cont = p_cont;
        self
    }

    pub fn discrete(mut self, x_disc: Vec<i64>, p_disc: usize) -> Self {
        self.x_disc = x_disc;
        self.p_disc = p_disc;
        self
    }

    pub fn continuous_names(mut self, names: Vec<String>) -> Self {
        self.cont_names = Some(names);
        self
    }

    pub fn discrete_names(mut self, names: Vec<String>) -> Self {
        self.disc_names = Some(names);
        self
    }

    /// Attaches a named auxiliary column, e.g. a covariate for balance checks.
    pub fn aux(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.aux.push((name.into(), values));
        self
    }

    pub fn treatment_kind(mut self, kind: TreatmentKind) -> Self {
        self.treatment = kind;
        self
    }

    pub fn build(self) -> Result<Dataset> {
        let n = self.y.len();
        if n == 0 {
            return Err(Error::EmptyDataset { n, min: 1 });
        }
        check_len("d", n, self.d.len())?;
        check_len("z", n, self.z.len())?;
        check_len("x_cont", n * self.p_cont, self.x_cont.len())?;
        check_len("x_disc", n * self.p_disc, self.x_disc.len())?;
        check_finite("y", &self.y)?;
        check_finite("d", &self.d)?;
        check_finite("x_cont", &self.x_cont)?;
        check_binary("z", &self.z)?;
        if self.treatment == TreatmentKind::Binary {
            check_binary("d", &self.d)?;
        }
        for (name, col) in &self.aux {
            check_len("aux column", n, col.len())?;
            check_finite(name, col)?;
        }
        let cont_names = match self.cont_names {
            Some(names) => {
                check_len("continuous names", self.p_cont, names.len())?;
                names
            }
            None => (1..=self.p_cont).map(|j| format!("x{j}")).collect(),
        };
        let disc_names = match self.disc_names {
            Some(names) => {
                check_len("discrete names", self.p_disc, names.len())?;
                names
            }
            None => (1..=self.p_disc).map(|j| format!("g{j}")).collect(),
        };
        Ok(Dataset {
            y: self.y,
            d: self.d,
            z: self.z,
            x_cont: self.x_cont,
            p_cont: self.p_cont,
            x_disc: self.x_disc,
            p_disc: self.p_disc,
            cont_names,
            disc_names,
            aux: self.aux,
            treatment: self.treatment,
            scaling: None,
        })
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

fn check_finite(column: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(row) => Err(Error::NonFinite {
            column: column.to_string(),
            row,
        }),
        None => Ok(()),
    }
}

fn check_binary(column: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|&v| v != 0.0 && v != 1.0) {
        Some(row) => Err(Error::NonBinary {
            column: column.to_string(),
            row,
            value: values[row],
        }),
        None => Ok(()),
    }
}

impl Dataset {
    /// Starts a dataset from outcome, treatment and recommendation columns.
    pub fn builder(y: Vec<f64>, d: Vec<f64>, z: Vec<f64>) -> DatasetBuilder {
        DatasetBuilder {
            y,
            d,
            z,
            x_cont: Vec::new(),
            p_cont: 0,
            x_disc: Vec::new(),
            p_disc: 0,
            cont_names: None,
            disc_names: None,
            aux: Vec::new(),
            treatment: TreatmentKind::Binary,
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p_cont(&self) -> usize {
        self.p_cont
    }

    pub fn p_disc(&self) -> usize {
        self.p_disc
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn treatment_kind(&self) -> TreatmentKind {
        self.treatment
    }

    /// Continuous covariates of observation `i`.
    pub fn x_cont_row(&self, i: usize) -> &[f64] {
        &self.x_cont[i * self.p_cont..(i + 1) * self.p_cont]
    }

    /// Discrete covariate codes of observation `i`.
    pub fn x_disc_row(&self, i: usize) -> &[i64] {
        &self.x_disc[i * self.p_disc..(i + 1) * self.p_disc]
    }

    /// Column `j` of the continuous covariates.
    pub fn x_cont_col(&self, j: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.x_cont[i * self.p_cont + j]).collect()
    }

    pub fn x_cont_flat(&self) -> &[f64] {
        &self.x_cont
    }

    pub fn x_disc_flat(&self) -> &[i64] {
        &self.x_disc
    }

    pub fn continuous_names(&self) -> &[String] {
        &self.cont_names
    }

    pub fn discrete_names(&self) -> &[String] {
        &self.disc_names
    }

    pub fn aux_columns(&self) -> &[(String, Vec<f64>)] {
        &self.aux
    }

    pub fn aux(&self, name: &str) -> Option<&[f64]> {
        self.aux
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    /// Map from the stored continuous covariates back to raw units, if standardized.
    pub fn scaling(&self) -> Option<&StandardizationMap> {
        self.scaling.as_ref()
    }

    /// Continuous covariates of observation `i` in raw units.
    pub fn raw_cont_row(&self, i: usize) -> Vec<f64> {
        let row = self.x_cont_row(i);
        match &self.scaling {
            Some(map) => map.invert(row),
            None => row.to_vec(),
        }
    }
}

/// Affine map `x ↦ (x − mean) / sd` applied column-wise to continuous covariates.
///
/// Constant columns keep `mean = 0`, `sd = 1` and are flagged, so they pass
/// through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationMap {
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
    pub constant: Vec<bool>,
}

impl StandardizationMap {
    pub fn identity(p: usize) -> Self {
        Self {
            means: vec![0.0; p],
            stddevs: vec![1.0; p],
            constant: vec![false; p],
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(self.means.iter().zip(&self.stddevs))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn invert(&self, standardized: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; standardized.len()];
        self.invert_into(standardized, &mut out);
        out
    }

    /// Writes raw-unit coordinates of `standardized` into `out`.
    pub fn invert_into(&self, standardized: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.means[j] + self.stddevs[j] * standardized[j];
        }
    }

    /// `self ∘ inner`: first undo `inner`, then undo `self`.
    fn compose(&self, inner: &StandardizationMap) -> StandardizationMap {
        StandardizationMap {
            means: (0..self.dim())
                .map(|j| self.means[j] + self.stddevs[j] * inner.means[j])
                .collect(),
            stddevs: (0..self.dim())
                .map(|j| self.stddevs[j] * inner.stddevs[j])
                .collect(),
            constant: (0..self.dim())
                .map(|j| self.constant[j] || inner.constant[j])
                .collect(),
        }
    }
}

/// Centers and scales every continuous column to mean zero and unit
/// population variance (denominator `n`). Discrete columns are untouched.
pub fn standardize(dataset: &Dataset) -> Result<(Dataset, StandardizationMap)> {
    let n = dataset.n();
    if n < 2 {
        return Err(Error::EmptyDataset { n, min: 2 });
    }
    let p = dataset.p_cont;
    let mut map = StandardizationMap::identity(p);
    for j in 0..p {
        let col = dataset.x_cont_col(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        let scale = col.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if sd == 0.0 || sd <= 1e-12 * scale {
            map.constant[j] = true;
        } else {
            map.means[j] = mean;
            map.stddevs[j] = sd;
        }
    }
    let mut out = dataset.clone();
    if p > 0 {
        for row in out.x_cont.chunks_mut(p) {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (*x - map.means[j]) / map.stddevs[j];
            }
        }
    }
    out.scaling = Some(match &dataset.scaling {
        Some(outer) => outer.compose(&map),
        None => map.clone(),
    });
    Ok((out, map))
}

/// Potential outcomes and treatments of a simulated sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialOutcomes {
    pub y1: Vec<f64>,
    pub y0: Vec<f64>,
    pub d1: Vec<f64>,
    pub d0: Vec<f64>,
}

impl PotentialOutcomes {
    pub fn n(&self) -> usize {
        self.y1.len()
    }

    /// Observed `(D_i, Y_i)` under recommendations `z`.
    pub fn observe(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d: Vec<f64> = z
            .iter()
            .enumerate()
            .map(|(i, &zi)| zi * self.d1[i] + (1.0 - zi) * self.d0[i])
            .collect();
        let y = d
            .iter()
            .enumerate()
            .map(|(i, &di)| di * self.y1[i] + (1.0 - di) * self.y0[i])
            .collect();
        (d, y)
    }

    /// `Y_{zi} = D_i(z) Y_i(1) + (1 − D_i(z)) Y_i(0)`.
    pub fn y_under(&self, z: u8) -> Vec<f64> {
        let dz = if z == 1 { &self.d1 } else { &self.d0 };
        (0..self.n())
            .map(|i| dz[i] * self.y1[i] + (1.0 - dz[i]) * self.y0[i])
            .collect()
    }

    /// Checks the observed-consistency identities against `dataset` exactly.
    pub fn is_consistent_with(&self, dataset: &Dataset) -> bool {
        if self.n() != dataset.n() {
            return false;
        }
        let (d, y) = self.observe(dataset.z());
        d == dataset.d() && y == dataset.y()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_col(x: Vec<f64>) -> Dataset {
        let n = x.len();
        Dataset::builder(vec![0.0; n], vec![0.0; n], vec![0.0; n])
            .continuous(x, 1)
            .build()
            .unwrap()
    }

    #[test]
    fn standardizes_with_population_variance() {
        let (out, map) = standardize(&one_col(vec![1.0, 2.0, 3.0])).unwrap();
        let expected = [-1.224744871391589, 0.0, 1.224744871391589];
        for (got, want) in out.x_cont_flat().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert_eq!(map.means, vec![2.0]);
        assert!((map.stddevs[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn standardized_column_is_a_fixed_point() {
        let (once, _) = standardize(&one_col(vec![0.3, -1.7, 2.2, 5.0, 0.1])).unwrap();
        let (twice, map) = standardize(&once).unwrap();
        for (a, b) in once.x_cont_flat().iter().zip(twice.x_cont_flat()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(map.means[0].abs() < 1e-10);
        assert!((map.stddevs[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_column_is_flagged_and_untouched() {
        let (out, map) = standardize(&one_col(vec![5.0, 5.0, 5.0])).unwrap();
        assert_eq!(out.x_cont_flat(), &[5.0, 5.0, 5.0]);
        assert!(map.constant[0]);
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            standardize(&one_col(vec![1.0])),
            Err(Error::EmptyDataset { n: 1, min: 2 })
        ));
    }

    #[test]
    fn discrete_columns_are_not_touched() {
        let ds = Dataset::builder(vec![0.0; 3], vec![0.0; 3], vec![1.0, 0.0, 1.0])
            .continuous(vec![1.0, 2.0, 4.0], 1)
            .discrete(vec![3, 7, 3], 1)
            .build()
            .unwrap();
        let (out, _) = standardize(&ds).unwrap();
        assert_eq!(out.x_disc_flat(), &[3, 7, 3]);
    }

    #[test]
    fn scaling_composes_back_to_raw_units() {
        let raw = vec![10.0, 12.0, 13.0, 19.0];
        let (once, _) = standardize(&one_col(raw.clone())).unwrap();
        let (twice, _) = standardize(&once).unwrap();
        for (i, r) in raw.iter().enumerate() {
            let back = twice.raw_cont_row(i)[0];
            assert!(((back - r) / r).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_binary_recommendation() {
        let err = Dataset::builder(vec![0.0; 2], vec![0.0; 2], vec![0.0, 2.0])
            .build()
            .unwrap_err();
        assert!(matches!(err, Error::NonBinary { row: 1, .. }));
    }

    #[test]
    fn continuous_treatment_skips_binary_check() {
        let ds = Dataset::builder(vec![0.0; 2], vec![5.0e6, 0.0], vec![1.0, 0.0])
            .treatment_kind(TreatmentKind::Continuous)
            .build();
        assert!(ds.is_ok());
    }

    #[test]
    fn observed_consistency() {
        let pot = PotentialOutcomes {
            y1: vec![3.0, 1.0, 2.0],
            y0: vec![1.0, 0.5, -1.0],
            d1: vec![1.0, 1.0, 0.0],
            d0: vec![0.0, 1.0, 0.0],
        };
        let z = vec![1.0, 0.0, 1.0];
        let (d, y) = pot.observe(&z);
        assert_eq!(d, vec![1.0, 1.0, 0.0]);
        assert_eq!(y, vec![3.0, 1.0, -1.0]);
        let ds = Dataset::builder(y, d, z).build().unwrap();
        assert!(pot.is_consistent_with(&ds));
        assert_eq!(pot.y_under(1), vec![3.0, 1.0, -1.0]);
        assert_eq!(pot.y_under(0), vec![1.0, 1.0, -1.0]);
    }
}
