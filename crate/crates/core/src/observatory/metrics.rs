//! Metrics frames and their CSV form.

use serde::{Deserialize, Serialize};

pub const METRICS_HEADER: &str = "step,population,free_resource,genotype_richness,shannon_diversity,\
dominant_genotype_length,births,deaths,parasite_count,new_genotypes";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsFrame {
    pub step: u64,
    pub population: u64,
    /// Free soup cells, or free food atoms.
    pub free_resource: u64,
    pub genotype_richness: u64,
    pub shannon_diversity: f64,
    pub dominant_genotype_length: u64,
    pub births: u64,
    pub deaths: u64,
    pub parasite_count: u64,
    pub new_genotypes: u64,
}

impl MetricsFrame {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.step,
            self.population,
            self.free_resource,
            self.genotype_richness,
            format_sig6(self.shannon_diversity),
            self.dominant_genotype_length,
            self.births,
            self.deaths,
            self.parasite_count,
            self.new_genotypes
        )
    }
}

/// `-sum p ln p` over the abundance fractions; zero abundances are ignored.
pub fn shannon(abundances: impl IntoIterator<Item = u64>) -> f64 {
    let v: Vec<u64> = abundances.into_iter().filter(|&a| a > 0).collect();
    if v.len() <= 1 {
        return 0.0;
    }
    let total: u64 = v.iter().sum();
    let t = total as f64;
    -v.iter()
        .map(|&a| {
            let p = a as f64 / t;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Six significant digits, plain decimal notation.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0".to_owned();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit (9.999996 -> 10.00000)
    let digits = s.chars().filter(|c| c.is_ascii_digit()).skip_while(|&c| c == '0').count();
    if digits > 6 && decimals > 0 {
        let d = decimals - 1;
        return format!("{x:.d$}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shannon_closed_forms() {
        assert_eq!(shannon([7]), 0.0);
        assert!((shannon([3, 3]) - std::f64::consts::LN_2).abs() < 1e-9);
        assert!((shannon([1, 1, 1, 1]) - 4f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig6(std::f64::consts::LN_2), "0.693147");
        assert_eq!(format_sig6(10f64.ln()), "2.30259");
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(0.000123456789), "0.000123457");
        assert_eq!(format_sig6(9.9999996), "10.0000");
    }

    #[test]
    fn header_is_frozen() {
        assert_eq!(
            METRICS_HEADER,
            "step,population,free_resource,genotype_richness,shannon_diversity,dominant_genotype_length,births,deaths,parasite_count,new_genotypes"
        );
    }
}
