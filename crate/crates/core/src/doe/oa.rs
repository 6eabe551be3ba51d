use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Experiment table: `rows[r][f]` is the 1-based level of factor `f` in run `r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrthogonalArray {
    pub name: String,
    pub levels: usize,
    pub rows: Vec<Vec<usize>>,
}

impl OrthogonalArray {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_factors(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Every combination of levels (lexicographic, last factor fastest). Not an
    /// orthogonal array in the fractional sense, but runs through the same
    /// experiment machinery.
    pub fn full_factorial(levels: usize, factors: usize) -> Result<Self> {
        if levels < 2 || factors < 1 {
            return Err(Error::validation(format!(
                "full factorial needs >= 2 levels and >= 1 factor, got ({levels}, {factors})"
            )));
        }
        let n = levels
            .checked_pow(factors as u32)
            .filter(|&n| n <= 1 << 20)
            .ok_or_else(|| Error::validation("full factorial too large"))?;
        let rows = (0..n).map(|r| digits(r, levels, factors).iter().map(|d| d + 1).collect()).collect();
        Ok(OrthogonalArray {
            name: format!("FF{n}"),
            levels,
            rows,
        })
    }

    /// True when each level appears equally often in every column.
    pub fn is_balanced(&self) -> bool {
        let n = self.n_rows();
        if n % self.levels != 0 {
            return false;
        }
        (0..self.n_factors()).all(|f| {
            let mut counts = vec![0; self.levels];
            for row in &self.rows {
                counts[row[f] - 1] += 1;
            }
            counts.iter().all(|&c| c == n / self.levels)
        })
    }

    /// True when each ordered level pair appears equally often in every column pair.
    pub fn is_pairwise_orthogonal(&self) -> bool {
        let (n, s) = (self.n_rows(), self.levels);
        if n % (s * s) != 0 {
            return false;
        }
        let k = self.n_factors();
        (0..k).all(|a| {
            (a + 1..k).all(|b| {
                let mut counts = vec![0; s * s];
                for row in &self.rows {
                    counts[(row[a] - 1) * s + row[b] - 1] += 1;
                }
                counts.iter().all(|&c| c == n / (s * s))
            })
        })
    }
}

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Base-`p` digits of `r`, most significant first.
fn digits(mut r: usize, p: usize, t: usize) -> Vec<usize> {
    let mut d = vec![0; t];
    for slot in d.iter_mut().rev() {
        *slot = r % p;
        r /= p;
    }
    d
}

/// Normalized coefficient vectors of `Z_p^t` (first non-zero entry 1): the unit
/// vectors first, then the rest in lexicographic order.
fn linear_forms(p: usize, t: usize) -> Vec<Vec<usize>> {
    let units: Vec<Vec<usize>> = (0..t)
        .map(|i| (0..t).map(|j| usize::from(i == j)).collect())
        .collect();
    let mut forms = units.clone();
    for r in 1..p.pow(t as u32) {
        let v = digits(r, p, t);
        let lead = v.iter().find(|&&x| x != 0).copied();
        if lead == Some(1) && !units.contains(&v) {
            forms.push(v);
        }
    }
    forms
}

/// Linear orthogonal array with `levels^t` runs: run `u in Z_levels^t`
/// (lexicographic) sets factor `f` to `c_f . u mod levels` + 1.
pub fn build_linear_oa(levels: usize, t: usize, factors: usize) -> Result<OrthogonalArray> {
    if !is_prime(levels) {
        return Err(Error::validation(format!(
            "orthogonal array levels must be prime, got {levels}"
        )));
    }
    if t < 2 {
        return Err(Error::validation("orthogonal array needs at least 2 base columns"));
    }
    let forms = linear_forms(levels, t);
    if factors < 1 || factors > forms.len() {
        return Err(Error::validation(format!(
            "{} runs at {levels} levels support 1..={} factors, got {factors}",
            levels.pow(t as u32),
            forms.len()
        )));
    }
    let n = levels.pow(t as u32);
    let rows = (0..n)
        .map(|r| {
            let u = digits(r, levels, t);
            forms[..factors]
                .iter()
                .map(|c| c.iter().zip(&u).map(|(a, b)| a * b).sum::<usize>() % levels + 1)
                .collect()
        })
        .collect();
    Ok(OrthogonalArray {
        name: format!("L{n}"),
        levels,
        rows,
    })
}

/// `levels^2`-run array: for run `(a, b)` the columns are `a, b, a+b, a+2b, …`
/// (mod `levels`, then +1). Needs a prime `levels` and `factors <= levels + 1`.
pub fn build_oa(levels: usize, factors: usize) -> Result<OrthogonalArray> {
    build_linear_oa(levels, 2, factors)
}

/// Standard arrays by name: `L9` (3 levels, ≤ 4 factors), `L25` (5 levels,
/// ≤ 6 factors) and `L27` (3 levels, ≤ 13 factors).
pub fn named_oa(name: &str, factors: usize) -> Result<OrthogonalArray> {
    let (levels, t) = match name.to_ascii_uppercase().as_str() {
        "L9" => (3, 2),
        "L25" => (5, 2),
        "L27" => (3, 3),
        _ => {
            return Err(Error::validation(format!(
                "unknown orthogonal array '{name}' (expected L9, L25 or L27)"
            )))
        }
    };
    build_linear_oa(levels, t, factors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l9_first_rows() {
        let oa = build_oa(3, 4).unwrap();
        assert_eq!(oa.name, "L9");
        assert_eq!(oa.rows[0], vec![1, 1, 1, 1]);
        // (a, b) = (0, 1): a, b, a+b, a+2b
        assert_eq!(oa.rows[1], vec![1, 2, 2, 3]);
        assert_eq!(oa.rows[3], vec![2, 1, 2, 2]);
    }

    #[test]
    fn rejects_non_prime_and_too_many_factors() {
        assert!(build_oa(4, 3).is_err());
        assert!(build_oa(3, 5).is_err());
        assert!(named_oa("L27", 14).is_err());
        assert!(named_oa("L16", 3).is_err());
    }

    #[test]
    fn full_factorial_shape() {
        let ff = OrthogonalArray::full_factorial(3, 4).unwrap();
        assert_eq!(ff.n_rows(), 81);
        assert!(ff.is_balanced());
        assert!(ff.is_pairwise_orthogonal());
    }
}
