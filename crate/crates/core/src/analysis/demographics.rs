//! Per-submarket composition statistics: age quantiles, sex ratios, and
//! relative minority ages.

use serde::Serialize;

use super::{AttributeTable, Ethnicity, Sex, Submarkets, DEFAULT_MIN_MEMBERS};
use crate::{Error, Result};

/// Quantile of sorted data by linear interpolation between the closest order
/// statistics at position `1 + (n - 1) p` (1-indexed).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = (n - 1) as f64 * p; // 0-indexed fractional position
    let lower = pos.floor() as usize;
    let upper = pos.ceil() as usize;
    let frac = pos - lower as f64;
    sorted[lower] + frac * (sorted[upper] - sorted[lower])
}

/// The five box-plot quantiles (whiskers at the 9th and 91st percentiles).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuantileSummary {
    pub p9: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p91: f64,
    pub count: usize,
    pub low_support: bool,
}

impl QuantileSummary {
    fn from_ages(mut ages: Vec<f64>, min_support: usize) -> Self {
        ages.sort_by(|a, b| a.partial_cmp(b).unwrap());
        QuantileSummary {
            p9: quantile(&ages, 0.09),
            p25: quantile(&ages, 0.25),
            p50: quantile(&ages, 0.50),
            p75: quantile(&ages, 0.75),
            p91: quantile(&ages, 0.91),
            count: ages.len(),
            low_support: ages.len() < min_support,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AgeQuantileCell {
    pub submarket: usize,
    /// None when the split by sex was not requested.
    pub sex: Option<Sex>,
    #[serde(flatten)]
    pub summary: QuantileSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgeQuantiles {
    pub cells: Vec<AgeQuantileCell>,
    pub warnings: Vec<String>,
}

/// Age distribution per submarket, optionally split by sex. Empty cells are
/// omitted with a warning; cells under `min_support` members are flagged.
pub fn age_quantiles(
    submarkets: &Submarkets,
    attrs: &AttributeTable,
    by_sex: bool,
    min_support: usize,
) -> Result<AgeQuantiles> {
    check_cover(submarkets, attrs)?;
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for (s, members) in submarkets.members().iter().enumerate() {
        let sexes: &[Option<Sex>] =
            if by_sex { &[Some(Sex::Male), Some(Sex::Female)] } else { &[None] };
        for &sex in sexes {
            let ages: Vec<f64> = members
                .iter()
                .filter(|&&i| sex.map_or(true, |sx| attrs.get(i).sex == sx))
                .map(|&i| attrs.get(i).age)
                .collect();
            if ages.is_empty() {
                warnings.push(format!("submarket {s} sex {sex:?}: empty cell omitted"));
                continue;
            }
            cells.push(AgeQuantileCell {
                submarket: s,
                sex,
                summary: QuantileSummary::from_ages(ages, min_support),
            });
        }
    }
    Ok(AgeQuantiles { cells, warnings })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SexRatioCell {
    /// None marks the overall row.
    pub submarket: Option<usize>,
    pub pct_men: f64,
    pub pct_women: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SexRatioTable {
    pub cells: Vec<SexRatioCell>,
    pub overall: SexRatioCell,
    pub warnings: Vec<String>,
}

/// Percentage of men and women per submarket plus an overall row; the two
/// percentages sum to 100 in every non-empty cell.
pub fn sex_ratio(submarkets: &Submarkets, attrs: &AttributeTable) -> Result<SexRatioTable> {
    check_cover(submarkets, attrs)?;
    if submarkets.len() == 0 {
        return Err(Error::EmptyInput("sex_ratio needs at least one node"));
    }
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    let ratio_of = |members: &[usize]| -> Option<(f64, f64, usize)> {
        if members.is_empty() {
            return None;
        }
        let men = members.iter().filter(|&&i| attrs.get(i).sex == Sex::Male).count();
        let n = members.len();
        let pct_men = 100.0 * men as f64 / n as f64;
        Some((pct_men, 100.0 - pct_men, n))
    };
    for (s, members) in submarkets.members().iter().enumerate() {
        match ratio_of(members) {
            Some((pct_men, pct_women, count)) => {
                cells.push(SexRatioCell { submarket: Some(s), pct_men, pct_women, count })
            }
            None => warnings.push(format!("submarket {s}: empty, omitted")),
        }
    }
    let all: Vec<usize> = (0..submarkets.len()).collect();
    let (pct_men, pct_women, count) = ratio_of(&all).expect("non-empty by check above");
    Ok(SexRatioTable {
        cells,
        overall: SexRatioCell { submarket: None, pct_men, pct_women, count },
        warnings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MinorityAgeCell {
    pub submarket: usize,
    pub ethnicity: Ethnicity,
    /// Mean age of the group minus mean age of the reference group in the
    /// same submarket, same sex.
    pub age_difference: f64,
    pub count: usize,
    pub low_support: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinorityAgeTable {
    pub cells: Vec<MinorityAgeCell>,
    pub warnings: Vec<String>,
}

/// Mean age of each ethnicity relative to the reference ethnicity, within
/// (submarket, sex) cells. `weights` switches the unit of analysis from users
/// (None, the default) to a per-node weighting such as message counts.
pub fn relative_minority_age(
    submarkets: &Submarkets,
    attrs: &AttributeTable,
    reference: Ethnicity,
    sex: Sex,
    min_support: usize,
    weights: Option<&[f64]>,
) -> Result<MinorityAgeTable> {
    check_cover(submarkets, attrs)?;
    if let Some(w) = weights {
        if w.len() != attrs.len() {
            return Err(Error::invalid("weight vector does not cover all nodes"));
        }
    }
    let weight_of = |i: usize| weights.map_or(1.0, |w| w[i]);
    let mut cells = Vec::new();
    let mut warnings = Vec::new();

    for (s, members) in submarkets.members().iter().enumerate() {
        let mean_age = |eth: Ethnicity| -> Option<(f64, usize)> {
            let mut total = 0.0;
            let mut mass = 0.0;
            let mut count = 0usize;
            for &i in members {
                let row = attrs.get(i);
                if row.sex == sex && row.ethnicity == eth {
                    total += weight_of(i) * row.age;
                    mass += weight_of(i);
                    count += 1;
                }
            }
            (mass > 0.0).then(|| (total / mass, count))
        };
        let Some((reference_age, _)) = mean_age(reference) else {
            warnings.push(format!(
                "submarket {s}: no {} {:?} members, submarket omitted",
                reference.code(),
                sex
            ));
            continue;
        };
        for eth in Ethnicity::ALL {
            if eth == reference {
                continue;
            }
            if let Some((age, count)) = mean_age(eth) {
                cells.push(MinorityAgeCell {
                    submarket: s,
                    ethnicity: eth,
                    age_difference: age - reference_age,
                    count,
                    low_support: count < min_support,
                });
            }
        }
    }
    Ok(MinorityAgeTable { cells, warnings })
}

pub(super) fn check_cover(submarkets: &Submarkets, attrs: &AttributeTable) -> Result<()> {
    if submarkets.len() > attrs.len() {
        return Err(Error::invalid(format!(
            "attribute table has {} rows but {} nodes are assigned",
            attrs.len(),
            submarkets.len()
        )));
    }
    Ok(())
}

/// Convenience: the default member floor.
pub fn default_min_members() -> usize {
    DEFAULT_MIN_MEMBERS
}
