use std::io::{Read, Write};

use serde::Serialize;

use super::PhaseLabError;
use crate::economics::UtilitySpec;

/// Columns preceding the profit columns, in CSV order.
pub const BASE_COLUMNS: [&str; 16] = [
    "lambda1", "impact1", "impact2", "alpha_c", "zeta", "sigma2", "rho", "rho_1", "rho_2",
    "theta_11", "theta_12", "theta_22", "phi", "phi_1", "phi_2", "nonergodic",
];

/// One grid point. Observables are `None` when the point is nonergodic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda1: f64,
    pub impact1: f64,
    pub impact2: f64,
    pub alpha_c: f64,
    pub zeta: Option<f64>,
    pub sigma2: Option<f64>,
    pub rho: Option<f64>,
    pub rho_1: Option<f64>,
    pub rho_2: Option<f64>,
    pub theta_11: Option<f64>,
    pub theta_12: Option<f64>,
    pub theta_22: Option<f64>,
    pub phi: Option<f64>,
    pub phi_1: Option<f64>,
    pub phi_2: Option<f64>,
    pub nonergodic: bool,
    /// One entry per utility of the enclosing table.
    pub profits: Vec<Option<f64>>,
}

impl SweepRow {
    pub(crate) fn empty(lambda1: f64, impact1: f64, impact2: f64, alpha_c: f64, n_profits: usize) -> Self {
        Self {
            lambda1,
            impact1,
            impact2,
            alpha_c,
            zeta: None,
            sigma2: None,
            rho: None,
            rho_1: None,
            rho_2: None,
            theta_11: None,
            theta_12: None,
            theta_22: None,
            phi: None,
            phi_1: None,
            phi_2: None,
            nonergodic: true,
            profits: vec![None; n_profits],
        }
    }

    fn base_values(&self) -> [Option<f64>; 15] {
        [
            Some(self.lambda1),
            Some(self.impact1),
            Some(self.impact2),
            Some(self.alpha_c),
            self.zeta,
            self.sigma2,
            self.rho,
            self.rho_1,
            self.rho_2,
            self.theta_11,
            self.theta_12,
            self.theta_22,
            self.phi,
            self.phi_1,
            self.phi_2,
        ]
    }

    fn base_slots(&mut self) -> [&mut Option<f64>; 11] {
        [
            &mut self.zeta,
            &mut self.sigma2,
            &mut self.rho,
            &mut self.rho_1,
            &mut self.rho_2,
            &mut self.theta_11,
            &mut self.theta_12,
            &mut self.theta_22,
            &mut self.phi,
            &mut self.phi_1,
            &mut self.phi_2,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub utilities: Vec<UtilitySpec>,
    pub rows: Vec<SweepRow>,
}

fn fmt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn parse(field: &str, column: &str) -> Result<Option<f64>, PhaseLabError> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| PhaseLabError::BadTable(format!("`{field}` in column {column}")))
}

impl SweepTable {
    pub fn header(&self) -> Vec<String> {
        BASE_COLUMNS
            .iter()
            .map(|c| c.to_string())
            .chain(self.utilities.iter().map(UtilitySpec::column_name))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), PhaseLabError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for row in &self.rows {
            let record: Vec<String> = row
                .base_values()
                .into_iter()
                .map(fmt)
                .chain(std::iter::once(row.nonergodic.to_string()))
                .chain(row.profits.iter().copied().map(fmt))
                .collect();
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, PhaseLabError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, PhaseLabError> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.len() < BASE_COLUMNS.len() || header[..BASE_COLUMNS.len()] != BASE_COLUMNS {
            return Err(PhaseLabError::BadTable("unexpected header".into()));
        }
        let utilities = header[BASE_COLUMNS.len()..]
            .iter()
            .map(|c| {
                UtilitySpec::from_column_name(c)
                    .ok_or_else(|| PhaseLabError::BadTable(format!("unknown profit column {c}")))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            let field = |k: usize| parse(&record[k], &header[k]);
            let required = |k: usize| {
                field(k)?.ok_or_else(|| PhaseLabError::BadTable(format!("missing {}", header[k])))
            };
            let mut row = SweepRow::empty(required(0)?, required(1)?, required(2)?, required(3)?, 0);
            for (k, slot) in (4..15).zip(row.base_slots()) {
                *slot = field(k)?;
            }
            row.nonergodic = match &record[15] {
                "true" => true,
                "false" => false,
                other => return Err(PhaseLabError::BadTable(format!("nonergodic flag `{other}`"))),
            };
            row.profits = (BASE_COLUMNS.len()..header.len())
                .map(field)
                .collect::<Result<_, _>>()?;
            rows.push(row);
        }
        Ok(Self { utilities, rows })
    }

    /// Values of a named column, `None` where the row has no value.
    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>, PhaseLabError> {
        if let Some(k) = BASE_COLUMNS[..15].iter().position(|c| *c == name) {
            return Ok(self.rows.iter().map(|r| r.base_values()[k]).collect());
        }
        if name == "nonergodic" {
            return Ok(self.rows.iter().map(|r| Some(f64::from(u8::from(r.nonergodic)))).collect());
        }
        let k = self
            .utilities
            .iter()
            .position(|u| u.column_name() == name)
            .ok_or_else(|| PhaseLabError::UnknownColumn(name.to_string()))?;
        Ok(self.rows.iter().map(|r| r.profits[k]).collect())
    }
}
