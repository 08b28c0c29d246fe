//! Weighted sums over the spacings of a sorted slice.
//!
//! Every closed form for the GMD statistic is a polynomial in the spacings
//! `Δ_i` with rank weights `a_i = (2i - m)/m`, where `m` is the length of the
//! slice. The population formulas evaluate these with `m = N`, the sample
//! plug-in estimators with `m = n`, so both sides share the code below.
//! Indices in comments are 1-based like the formulas; the arrays are 0-based.

use crate::special::NeumaierSum;

pub(crate) struct Spacings<'a> {
    d: &'a [f64],
    a: &'a [f64],
    m: usize,
}

impl<'a> Spacings<'a> {
    pub(crate) fn new(spacings: &'a [f64], weights: &'a [f64]) -> Self {
        debug_assert_eq!(spacings.len(), weights.len());
        Self {
            d: spacings,
            a: weights,
            m: spacings.len() + 1,
        }
    }

    fn mf(&self) -> f64 {
        self.m as f64
    }

    /// `L_k = Σ_i (𝕀{i >= k} - i/m) a_i Δ_i` for `k = 1..=m`.
    pub(crate) fn linear_scores(&self) -> Vec<f64> {
        let m = self.mf();
        let shift: f64 = self
            .d
            .iter()
            .zip(self.a)
            .enumerate()
            .map(|(idx, (d, a))| (idx + 1) as f64 * a * d)
            .sum::<f64>()
            / m;
        let mut scores = vec![0.0; self.m];
        let mut suffix = 0.0;
        scores[self.m - 1] = -shift;
        for k in (0..self.m - 1).rev() {
            suffix += self.a[k] * self.d[k];
            scores[k] = suffix - shift;
        }
        scores
    }

    /// `Σ i(m-i) a_i² Δ_i² + 2 Σ_{i<j} i(m-j) a_i a_j Δ_i Δ_j`.
    pub(crate) fn sigma1_bracket(&self) -> f64 {
        let m = self.mf();
        let mut diag = 0.0;
        let mut cross = 0.0;
        let mut prefix = 0.0;
        for (idx, (&d, &a)) in self.d.iter().zip(self.a).enumerate() {
            let i = (idx + 1) as f64;
            let e = a * d;
            diag += i * (m - i) * e * e;
            cross += (m - i) * e * prefix;
            prefix += i * e;
        }
        diag + 2.0 * cross
    }

    /// `Σ i(i-1)(m-i-1)(m-i) Δ_i² + 2 Σ_{i<j} i(i-1)(m-j-1)(m-j) Δ_i Δ_j`.
    pub(crate) fn sigma2_bracket(&self) -> f64 {
        let m = self.mf();
        let mut diag = 0.0;
        let mut cross = 0.0;
        let mut prefix = 0.0;
        for (idx, &d) in self.d.iter().enumerate() {
            let i = (idx + 1) as f64;
            let left = i * (i - 1.0);
            let right = (m - i - 1.0) * (m - i);
            diag += left * right * d * d;
            cross += right * d * prefix;
            prefix += left * d;
        }
        diag + 2.0 * cross
    }

    /// The bracket of the skewness closed form
    ///
    /// ```text
    /// Σ_i i(m-2i)(m-i) e_i³ + 3 Σ_{i<j} i(m-2i)(m-j) e_i² e_j
    ///   + 3 Σ_{i<j} i(m-2j)(m-j) e_i e_j² + 6 Σ_{i<j<k} i(m-2j)(m-k) e_i e_j e_k
    /// ```
    ///
    /// with `e_i = a_i Δ_i`. Linear time: the triple sum factors around the
    /// middle index.
    pub(crate) fn alpha_bracket(&self) -> f64 {
        let m = self.mf();
        let e: Vec<f64> = self.d.iter().zip(self.a).map(|(d, a)| d * a).collect();
        let len = e.len();
        // right[j] = Σ_{k>j} (m-k) e_k
        let mut right = vec![0.0; len];
        let mut acc = 0.0;
        for idx in (0..len).rev() {
            right[idx] = acc;
            acc += (m - (idx + 1) as f64) * e[idx];
        }
        let mut t1 = 0.0;
        let mut t2 = 0.0;
        let mut t3 = 0.0;
        let mut t4 = 0.0;
        let mut sq_prefix = 0.0; // Σ_{i<j} i(m-2i) e_i²
        let mut lin_prefix = 0.0; // Σ_{i<j} i e_i
        for (idx, &ej) in e.iter().enumerate() {
            let j = (idx + 1) as f64;
            t1 += j * (m - 2.0 * j) * (m - j) * ej * ej * ej;
            t2 += (m - j) * ej * sq_prefix;
            t3 += (m - 2.0 * j) * (m - j) * ej * ej * lin_prefix;
            t4 += (m - 2.0 * j) * ej * lin_prefix * right[idx];
            sq_prefix += j * (m - 2.0 * j) * ej * ej;
            lin_prefix += j * ej;
        }
        t1 + 3.0 * t2 + 3.0 * t3 + 6.0 * t4
    }

    /// Literal O(m³) evaluation of [`Self::alpha_bracket`].
    #[cfg(test)]
    pub(crate) fn alpha_bracket_naive(&self) -> f64 {
        let m = self.mf();
        let len = self.d.len();
        let e = |i: usize| self.a[i - 1] * self.d[i - 1];
        let mut total = 0.0;
        for i in 1..=len {
            let fi = i as f64;
            total += fi * (m - 2.0 * fi) * (m - fi) * e(i).powi(3);
            for j in i + 1..=len {
                let fj = j as f64;
                total += 3.0 * fi * (m - 2.0 * fi) * (m - fj) * e(i) * e(i) * e(j);
                total += 3.0 * fi * (m - 2.0 * fj) * (m - fj) * e(i) * e(j) * e(j);
                for k in j + 1..=len {
                    let fk = k as f64;
                    total += 6.0 * fi * (m - 2.0 * fj) * (m - fk) * e(i) * e(j) * e(k);
                }
            }
        }
        total
    }

    /// Literal O(m²) double sums of [`Self::sigma1_bracket`] and
    /// [`Self::sigma2_bracket`].
    #[cfg(test)]
    pub(crate) fn sigma_brackets_naive(&self) -> (f64, f64) {
        let m = self.mf();
        let len = self.d.len();
        let (mut b1, mut b2) = (0.0, 0.0);
        for i in 1..=len {
            let fi = i as f64;
            let (di, ai) = (self.d[i - 1], self.a[i - 1]);
            b1 += fi * (m - fi) * ai * ai * di * di;
            b2 += fi * (fi - 1.0) * (m - fi - 1.0) * (m - fi) * di * di;
            for j in i + 1..=len {
                let fj = j as f64;
                let (dj, aj) = (self.d[j - 1], self.a[j - 1]);
                b1 += 2.0 * fi * (m - fj) * ai * aj * di * dj;
                b2 += 2.0 * fi * (fi - 1.0) * (m - fj - 1.0) * (m - fj) * di * dj;
            }
        }
        (b1, b2)
    }

    /// Case function `c_{ijm}` of the κ closed form, with the branches tried
    /// in their printed order. `s` is the slice length, `(i, j, k)` are
    /// 1-based spacing indices.
    pub(crate) fn case_weight(s: f64, i: usize, j: usize, k: usize) -> f64 {
        let (fi, fj, fk) = (i as f64, j as f64, k as f64);
        if i <= j && j <= k {
            fi * (fi - 1.0) * (s - fk) * (s - fj - 1.0 + fj * (fk - fj) / s)
        } else if i <= k && k < j {
            fi * (fi - 1.0) * (s - fj) * (s - fk - 1.0 + fk * (fk - fj) / s)
        } else if j < i && i < k {
            fj * (s - fk)
                * ((fi - 1.0) * (s - fi - 1.0)
                    + ((s - fi) * (s - fi - 1.0) * (fi - fj) + fi * (fi - 1.0) * (fk - fi)) / s)
        } else if k < i && i < j {
            fk * (s - fj)
                * ((fi - 1.0) * (s - fi - 1.0)
                    + (fi * (fi - 1.0) * (fi - fj) + (s - fi - 1.0) * (s - fi) * (fk - fi)) / s)
        } else if j < k && k <= i {
            fj * (s - fi - 1.0) * (s - fi) * (fk - 1.0 + (s - fk) * (fk - fj) / s)
        } else {
            // k <= j <= i
            fk * (s - fi - 1.0) * (s - fi) * (fj - 1.0 + (s - fj) * (fk - fj) / s)
        }
    }

    /// `Σ_{i,j,k} c_{ijk} a_j a_k Δ_i Δ_j Δ_k` by the literal triple loop
    /// with compensated summation. O(m³).
    pub(crate) fn kappa_sum_triple(&self) -> f64 {
        let s = self.mf();
        let len = self.d.len();
        let mut total = NeumaierSum::default();
        for j in 1..=len {
            let ej = self.a[j - 1] * self.d[j - 1];
            if ej == 0.0 {
                continue;
            }
            for k in 1..=len {
                let ejk = ej * self.a[k - 1] * self.d[k - 1];
                if ejk == 0.0 {
                    continue;
                }
                for i in 1..=len {
                    total.add(Self::case_weight(s, i, j, k) * ejk * self.d[i - 1]);
                }
            }
        }
        total.value()
    }

    /// Same triple sum, grouped by the six cases: for fixed `(j, k)` each case
    /// is a cubic in `i` over a contiguous range, so power-weighted prefix
    /// sums `Σ i^p Δ_i` close the inner sum in O(1). O(m²) overall.
    pub(crate) fn kappa_sum_grouped(&self) -> f64 {
        let s = self.mf();
        let len = self.d.len();
        // power[p][t] = Σ_{i<=t} i^p Δ_i, t = 0..=len
        let mut power = [
            vec![0.0; len + 1],
            vec![0.0; len + 1],
            vec![0.0; len + 1],
            vec![0.0; len + 1],
        ];
        for t in 1..=len {
            let fi = t as f64;
            let d = self.d[t - 1];
            let mut ip = 1.0;
            for row in power.iter_mut() {
                row[t] = row[t - 1] + ip * d;
                ip *= fi;
            }
        }
        let range = |poly: &Cubic, lo: usize, hi: usize| -> f64 {
            if lo > hi {
                return 0.0;
            }
            (0..4)
                .map(|p| poly.0[p] * (power[p][hi] - power[p][lo - 1]))
                .sum()
        };
        let x = Cubic::var();
        let one = Cubic::constant(1.0);
        let c = Cubic::constant;
        let mut total = NeumaierSum::default();
        for j in 1..=len {
            let ej = self.a[j - 1] * self.d[j - 1];
            if ej == 0.0 {
                continue;
            }
            let fj = j as f64;
            for k in 1..=len {
                let ejk = ej * self.a[k - 1] * self.d[k - 1];
                if ejk == 0.0 {
                    continue;
                }
                let fk = k as f64;
                // i(i-1), (i-1)(s-i-1), (s-i-1)(s-i) as polynomials in i
                let ii1 = x.mul(&x.sub(&one));
                let mid = x.sub(&one).mul(&c(s - 1.0).sub(&x));
                let tail = c(s - 1.0).sub(&x).mul(&c(s).sub(&x));
                let mut inner = 0.0;
                if j <= k {
                    // case 1: i <= j
                    let w = (s - fk) * (s - fj - 1.0 + fj * (fk - fj) / s);
                    inner += w * range(&ii1, 1, j);
                    if j < k {
                        // case 3: j < i < k
                        let poly = mid
                            .add(
                                &tail
                                    .mul(&x.sub(&c(fj)))
                                    .add(&ii1.mul(&c(fk).sub(&x)))
                                    .scale(1.0 / s),
                            )
                            .scale(fj * (s - fk));
                        inner += range(&poly, j + 1, k - 1);
                        // case 5: k <= i
                        let w = fj * (fk - 1.0 + (s - fk) * (fk - fj) / s);
                        inner += w * range(&tail, k, len);
                    } else {
                        // j == k: case 6 for i > j
                        let w = fk * (fj - 1.0 + (s - fj) * (fk - fj) / s);
                        inner += w * range(&tail, j + 1, len);
                    }
                } else {
                    // case 2: i <= k < j
                    let w = (s - fj) * (s - fk - 1.0 + fk * (fk - fj) / s);
                    inner += w * range(&ii1, 1, k);
                    // case 4: k < i < j
                    let poly = mid
                        .add(
                            &ii1.mul(&x.sub(&c(fj)))
                                .add(&tail.mul(&c(fk).sub(&x)))
                                .scale(1.0 / s),
                        )
                        .scale(fk * (s - fj));
                    inner += range(&poly, k + 1, j - 1);
                    // case 6: j <= i
                    let w = fk * (fj - 1.0 + (s - fj) * (fk - fj) / s);
                    inner += w * range(&tail, j, len);
                }
                total.add(inner * ejk);
            }
        }
        total.value()
    }

    /// Same triple sum through its pair representation
    /// `2 Σ_{k<l} Φ_{kl} L_k L_l`, where `Φ_{kl} = Σ_i φ_{kl}(i) Δ_i` is the
    /// unnormalised second-order kernel. `Φ_{kl}` splits as `F(k) + H(l)`, so
    /// the pair sum collapses to linear time.
    pub(crate) fn kappa_sum_linear(&self) -> f64 {
        let s = self.mf();
        let len = self.d.len();
        let scores = self.linear_scores();
        let kernel = SecondOrderSums::new(self.d, s);
        let mut total_scores: f64 = scores.iter().sum();
        let mut before = 0.0; // Σ_{k<l} L_k
        let mut acc = NeumaierSum::default();
        for (idx, &lk) in scores.iter().enumerate() {
            let k = idx + 1;
            total_scores -= lk; // now Σ_{l>k} L_l
            acc.add(kernel.left(k) * lk * total_scores);
            acc.add(kernel.right(k) * lk * before);
            before += lk;
        }
        debug_assert!(len + 1 == scores.len());
        2.0 * acc.value()
    }
}

/// Prefix sums for `Φ_{kl} = Σ_i φ_{kl}(i) Δ_i` with
/// `φ = i(i-1)` for `i < k`, `-(i-1)(s-i-1)` for `k <= i < l`,
/// `(s-i-1)(s-i)` for `i >= l` (unnormalised).
pub(crate) struct SecondOrderSums {
    low: Vec<f64>,
    mid: Vec<f64>,
    high: Vec<f64>,
}

impl SecondOrderSums {
    pub(crate) fn new(d: &[f64], s: f64) -> Self {
        let len = d.len();
        let mut low = vec![0.0; len + 1];
        let mut mid = vec![0.0; len + 1];
        let mut high = vec![0.0; len + 1];
        for t in 1..=len {
            let i = t as f64;
            low[t] = low[t - 1] + i * (i - 1.0) * d[t - 1];
            mid[t] = mid[t - 1] + (i - 1.0) * (s - i - 1.0) * d[t - 1];
            high[t] = high[t - 1] + (s - i - 1.0) * (s - i) * d[t - 1];
        }
        Self { low, mid, high }
    }

    /// `Φ_{kl}` for 1-based unit indices `k < l`.
    pub(crate) fn eval(&self, k: usize, l: usize) -> f64 {
        self.left(k) + self.right(l)
    }

    /// Part of `Φ_{kl}` that depends on the lower index only.
    fn left(&self, k: usize) -> f64 {
        self.low[k - 1] + self.mid[k - 1]
    }

    /// Part of `Φ_{kl}` that depends on the upper index only.
    fn right(&self, l: usize) -> f64 {
        let last = self.high.len() - 1;
        self.high[last] - self.high[l - 1] - self.mid[l - 1]
    }
}

/// Cubic polynomial in one variable, coefficients in increasing degree.
/// Products are truncated at degree three, which never loses terms for the
/// case weights.
#[derive(Clone, Copy)]
struct Cubic([f64; 4]);

impl Cubic {
    fn constant(c: f64) -> Self {
        Cubic([c, 0.0, 0.0, 0.0])
    }

    fn var() -> Self {
        Cubic([0.0, 1.0, 0.0, 0.0])
    }

    fn add(&self, o: &Self) -> Self {
        Cubic(std::array::from_fn(|p| self.0[p] + o.0[p]))
    }

    fn sub(&self, o: &Self) -> Self {
        Cubic(std::array::from_fn(|p| self.0[p] - o.0[p]))
    }

    fn scale(&self, c: f64) -> Self {
        Cubic(self.0.map(|v| v * c))
    }

    fn mul(&self, o: &Self) -> Self {
        let mut out = [0.0; 4];
        for (p, &a) in self.0.iter().enumerate() {
            for (q, &b) in o.0.iter().enumerate() {
                if p + q < 4 {
                    out[p + q] += a * b;
                } else {
                    debug_assert!(a == 0.0 || b == 0.0);
                }
            }
        }
        Cubic(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{rank_weights, sort_values, spacings_of};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sorted(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<f64> = (0..len).map(|_| rng.random::<f64>().powi(3) * 10.0).collect();
        sort_values(&mut v);
        v
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()) + 1e-15
    }

    #[test]
    fn fast_brackets_match_literal_sums() {
        for (len, seed) in [(3, 1), (5, 2), (12, 3), (40, 4)] {
            let v = random_sorted(len, seed);
            let d = spacings_of(&v);
            let a = rank_weights(len);
            let sp = Spacings::new(&d, &a);
            let (b1, b2) = sp.sigma_brackets_naive();
            assert!(close(sp.sigma1_bracket(), b1, 1e-12));
            assert!(close(sp.sigma2_bracket(), b2, 1e-12));
            assert!(close(sp.alpha_bracket(), sp.alpha_bracket_naive(), 1e-10));
        }
    }

    #[test]
    fn kappa_routes_agree() {
        for (len, seed) in [(3, 11), (4, 12), (7, 13), (25, 14), (90, 15)] {
            let v = random_sorted(len, seed);
            let d = spacings_of(&v);
            let a = rank_weights(len);
            let sp = Spacings::new(&d, &a);
            let triple = sp.kappa_sum_triple();
            let grouped = sp.kappa_sum_grouped();
            let linear = sp.kappa_sum_linear();
            assert!(close(triple, grouped, 1e-9), "{len}: {triple} vs {grouped}");
            assert!(close(triple, linear, 1e-9), "{len}: {triple} vs {linear}");
        }
    }

    #[test]
    fn kappa_routes_with_ties() {
        let v = [0.0, 0.0, 1.0, 1.0, 1.0, 2.5, 4.0, 4.0];
        let d = spacings_of(&v);
        let a = rank_weights(v.len());
        let sp = Spacings::new(&d, &a);
        let triple = sp.kappa_sum_triple();
        assert!(close(triple, sp.kappa_sum_grouped(), 1e-10));
        assert!(close(triple, sp.kappa_sum_linear(), 1e-10));
    }

    #[test]
    fn case_table_agrees_on_the_diagonal() {
        // i = j = k satisfies both the first and the last printed branch.
        let s = 9.0;
        for i in 1..9usize {
            let fi = i as f64;
            let last = fi * (s - fi - 1.0) * (s - fi) * (fi - 1.0);
            assert!(close(Spacings::case_weight(s, i, i, i), last, 1e-15) || last == 0.0);
        }
    }

    #[test]
    fn pair_kernel_prefix_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d: Vec<f64> = (0..9).map(|_| rng.random::<f64>()).collect();
        let s = 10.0;
        let sums = SecondOrderSums::new(&d, s);
        for k in 1..=10 {
            for l in k + 1..=10 {
                let direct: f64 = (1..=9)
                    .map(|i| {
                        let fi = i as f64;
                        let phi = if i < k {
                            fi * (fi - 1.0)
                        } else if i < l {
                            -(fi - 1.0) * (s - fi - 1.0)
                        } else {
                            (s - fi - 1.0) * (s - fi)
                        };
                        phi * d[i - 1]
                    })
                    .sum();
                assert!((sums.eval(k, l) - direct).abs() < 1e-12);
            }
        }
    }
}
