//! Flat-hazard conversions between CDS spreads, hazard rates and cumulative
//! default probabilities.
//!
//! The credit triangle `spread = (1 - R) * h` with survival `exp(-h T)` links
//! everything. Spreads are quoted in basis points at the boundary and carried
//! as decimals internally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BPS: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CreditQuote {
    pub spread_bps: f64,
    pub recovery: f64,
    pub tenor_years: f64,
}

impl CreditQuote {
    pub fn new(spread_bps: f64, recovery: f64, tenor_years: f64) -> Result<Self> {
        let quote = CreditQuote {
            spread_bps,
            recovery,
            tenor_years,
        };
        quote.validate()?;
        Ok(quote)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spread_bps.is_finite() && self.spread_bps >= 0.0) {
            return Err(Error::invalid("spread_bps", format!("must be non-negative, got {}", self.spread_bps)));
        }
        check_recovery(self.recovery)?;
        check_tenor(self.tenor_years)
    }
}

fn check_recovery(recovery: f64) -> Result<()> {
    if !(0.0..1.0).contains(&recovery) {
        return Err(Error::invalid("recovery", format!("must lie in [0, 1), got {recovery}")));
    }
    Ok(())
}

fn check_tenor(tenor: f64) -> Result<()> {
    if !(tenor.is_finite() && tenor > 0.0) {
        return Err(Error::invalid("tenor", format!("must be positive, got {tenor}")));
    }
    Ok(())
}

/// Flat hazard rate per annum implied by a spread.
pub fn hazard_from_spread(quote: &CreditQuote) -> Result<f64> {
    quote.validate()?;
    Ok(quote.spread_bps / BPS / (1.0 - quote.recovery))
}

/// Cumulative default probability over the quote's tenor.
pub fn pd_from_spread(quote: &CreditQuote) -> Result<f64> {
    let h = hazard_from_spread(quote)?;
    Ok(-(-h * quote.tenor_years).exp_m1())
}

pub fn survival_from_spread(quote: &CreditQuote) -> Result<f64> {
    let h = hazard_from_spread(quote)?;
    Ok((-h * quote.tenor_years).exp())
}

pub fn spread_from_pd(pd: f64, recovery: f64, tenor: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&pd) {
        return Err(Error::invalid("pd", format!("must lie in [0, 1), got {pd}")));
    }
    check_recovery(recovery)?;
    check_tenor(tenor)?;
    let h = -(-pd).ln_1p() / tenor;
    Ok((1.0 - recovery) * h * BPS)
}

pub fn spread_from_survival(p_surv: f64, recovery: f64, tenor: f64) -> Result<f64> {
    if !(p_surv > 0.0 && p_surv <= 1.0) {
        return Err(Error::invalid("survival", format!("must lie in (0, 1], got {p_surv}")));
    }
    check_recovery(recovery)?;
    check_tenor(tenor)?;
    let h = -p_surv.ln() / tenor;
    // -ln(1) is -0.0
    Ok(((1.0 - recovery) * h * BPS).max(0.0))
}

/// One row of the generic 5Y reference table: market CDS quotes (Oct 2012)
/// next to long-term S&P 5Y cumulative default probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRow {
    pub rating: &'static str,
    pub cds_spread_bps: f64,
    pub recovery_pct: f64,
    pub sp_5y_pd_bps: f64,
    pub sp_as_cds_bps: f64,
}

impl RatingRow {
    pub fn recovery(&self) -> f64 {
        self.recovery_pct / 100.0
    }
}

const TABLE1: [(&str, f64, f64, f64, f64); 4] = [
    ("A", 90.0, 38.0, 66.0, 8.0),
    ("BBB", 130.0, 38.0, 230.0, 29.0),
    ("BB", 290.0, 37.0, 861.0, 113.0),
    ("B", 510.0, 36.0, 2083.0, 299.0),
];

pub const TABLE1_TENOR: f64 = 5.0;

pub const TABLE1_CSV_HEADER: &str = "rating,cds_spread_bps,recovery_pct,sp_5y_pd_bps,sp_as_cds_bps";

pub fn table1_reference() -> Vec<RatingRow> {
    TABLE1
        .iter()
        .map(|&(rating, cds, rec, pd, as_cds)| RatingRow {
            rating,
            cds_spread_bps: cds,
            recovery_pct: rec,
            sp_5y_pd_bps: pd,
            sp_as_cds_bps: as_cds,
        })
        .collect()
}

pub fn table1_csv() -> String {
    let mut out = String::from(TABLE1_CSV_HEADER);
    out.push('\n');
    for row in table1_reference() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.rating, row.cds_spread_bps, row.recovery_pct, row.sp_5y_pd_bps, row.sp_as_cds_bps
        ));
    }
    out
}

/// Recovery rate for a spread appearing in the reference table, matched
/// against either the market or the S&P-implied column.
pub fn table1_recovery_for(spread_bps: f64) -> Option<f64> {
    table1_reference()
        .into_iter()
        .find(|row| row.cds_spread_bps == spread_bps || row.sp_as_cds_bps == spread_bps)
        .map(|row| row.recovery())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(spread: f64, rec: f64) -> CreditQuote {
        CreditQuote::new(spread, rec, 5.0).unwrap()
    }

    #[test]
    fn hazard_examples() {
        assert_eq!(hazard_from_spread(&q(0.0, 0.4)).unwrap(), 0.0);
        assert!((hazard_from_spread(&q(90.0, 0.38)).unwrap() - 0.009 / 0.62).abs() < 1e-16);
        assert!((hazard_from_spread(&q(510.0, 0.36)).unwrap() - 0.051 / 0.64).abs() < 1e-16);
    }

    #[test]
    fn quote_validation() {
        assert!(CreditQuote::new(90.0, 1.0, 5.0).is_err());
        assert!(CreditQuote::new(-1.0, 0.4, 5.0).is_err());
        assert!(CreditQuote::new(90.0, 0.4, 0.0).is_err());
    }

    #[test]
    fn pd_examples() {
        assert_eq!(pd_from_spread(&q(0.0, 0.38)).unwrap(), 0.0);
        // 1 - exp(-0.0145161290322580645 * 5), mpmath
        let pd = pd_from_spread(&q(90.0, 0.38)).unwrap();
        assert!((pd - 0.070_009_255_617_545_51).abs() < 1e-15);
        // series: x - x^2/2 + x^3/6 - x^4/24 + x^5/120 with x = 0.0725806...
        let x: f64 = 0.009 / 0.62 * 5.0;
        let series = x - x.powi(2) / 2.0 + x.powi(3) / 6.0 - x.powi(4) / 24.0 + x.powi(5) / 120.0;
        assert!((pd - series).abs() < 1e-8);
    }

    #[test]
    fn spread_pd_round_trip() {
        let quote = q(130.0, 0.38);
        let pd = pd_from_spread(&quote).unwrap();
        let back = spread_from_pd(pd, 0.38, 5.0).unwrap();
        assert!((back - 130.0).abs() / 130.0 < 1e-9);
    }

    #[test]
    fn table1_final_column_reproduced() {
        for row in table1_reference() {
            let s = spread_from_pd(row.sp_5y_pd_bps / 1e4, row.recovery(), TABLE1_TENOR).unwrap();
            assert!((s - row.sp_as_cds_bps).abs() <= 0.5, "{}: {s}", row.rating);
            assert_eq!(s.round(), row.sp_as_cds_bps);
        }
    }

    #[test]
    fn table1_rows() {
        let rows = table1_reference();
        assert_eq!(rows.len(), 4);
        assert_eq!(
            (rows[0].cds_spread_bps, rows[0].recovery_pct, rows[0].sp_5y_pd_bps, rows[0].sp_as_cds_bps),
            (90.0, 38.0, 66.0, 8.0)
        );
        assert_eq!(rows[2].rating, "BB");
        assert_eq!(
            (rows[2].cds_spread_bps, rows[2].recovery_pct, rows[2].sp_5y_pd_bps, rows[2].sp_as_cds_bps),
            (290.0, 37.0, 861.0, 113.0)
        );
    }

    #[test]
    fn survival_conversion() {
        assert_eq!(spread_from_survival(1.0, 0.38, 5.0).unwrap(), 0.0);
        assert_eq!(spread_from_survival(1.0 - 0.0230, 0.38, 5.0).unwrap().round(), 29.0);
        assert!(spread_from_survival(0.0, 0.38, 5.0).is_err());
        assert!(spread_from_pd(1.0, 0.38, 5.0).is_err());
        for &pd in &[1e-6, 0.01, 0.2, 0.7] {
            let a = spread_from_survival(1.0 - pd, 0.3, 3.0).unwrap();
            let b = spread_from_pd(pd, 0.3, 3.0).unwrap();
            assert!((a - b).abs() <= 1e-9 * b);
        }
    }

    #[test]
    fn recovery_lookup() {
        assert_eq!(table1_recovery_for(8.0), Some(0.38));
        assert_eq!(table1_recovery_for(290.0), Some(0.37));
        assert_eq!(table1_recovery_for(510.0), Some(0.36));
        assert_eq!(table1_recovery_for(100.0), None);
    }

    #[test]
    fn csv_matches_fixture() {
        let fixture = include_str!("../fixtures/table1.csv");
        assert_eq!(table1_csv(), fixture);
    }
}
