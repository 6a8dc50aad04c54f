//! 15-point Gauss-Kronrod panels with adaptive bisection, and cumulative
//! primitive tables evaluated by "node value + partial panel".
//!
//! The integrands of this crate are vector valued (transverse potentials,
//! joint primitives), hence the const-generic component count N.

use crate::error::Error;
use crate::Result;

/// Kronrod abscissae (positive half) of the 7-15 pair.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// 7-point Gauss weights (for the embedded error estimate).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Gauss-Kronrod panel on [a, b].
///
/// Returns (integral, error estimate, resabs) where resabs approximates
/// the integral of |f| and serves as the local scale for relative tests.
///
/// The error estimate is the QUADPACK one, resasc * min(1,
/// (200 |K-G| / resasc)^1.5), not the raw |K-G|: when the integrand carries
/// evaluation noise (for trig of large absolute phase the angle alone holds
/// eps * |k x| of it), |K-G| bottoms out at that noise level independently of
/// the panel width and raw-difference bisection would never terminate. The
/// deflated estimate recognises the difference as noise and lets such panels
/// pass; for genuinely unresolved structure it equals resasc and refinement
/// proceeds as usual.
pub fn gk15<const N: usize>(
    f: &(dyn Fn(f64) -> [f64; N] + '_),
    a: f64,
    b: f64,
) -> ([f64; N], f64, f64) {
    let hl = 0.5 * (b - a);
    let mid = 0.5 * (a + b);

    let fc = f(mid);
    let mut fv1 = [[0.0; N]; 7];
    let mut fv2 = [[0.0; N]; 7];
    let mut kronrod = [0.0; N];
    let mut gauss = [0.0; N];
    let mut resabs = 0.0;
    for i in 0..N {
        kronrod[i] = WGK[7] * fc[i];
        resabs += WGK[7] * fc[i].abs();
    }
    gauss.iter_mut().zip(&fc).for_each(|(g, &v)| *g = WG[3] * v);

    for j in 0..7 {
        let dx = hl * XGK[j];
        fv1[j] = f(mid - dx);
        fv2[j] = f(mid + dx);
        for i in 0..N {
            let sum = fv1[j][i] + fv2[j][i];
            kronrod[i] += WGK[j] * sum;
            resabs += WGK[j] * (fv1[j][i].abs() + fv2[j][i].abs());
            // Odd Kronrod indices are the embedded Gauss points.
            if j % 2 == 1 {
                gauss[i] += WG[j / 2] * sum;
            }
        }
    }

    let mut err = 0.0f64;
    let mut integral = [0.0; N];
    for i in 0..N {
        integral[i] = kronrod[i] * hl;
        let raw = ((kronrod[i] - gauss[i]) * hl).abs();
        // Integral of |f - mean| as the deflation scale.
        let mean = kronrod[i] * 0.5;
        let mut resasc = WGK[7] * (fc[i] - mean).abs();
        for j in 0..7 {
            resasc += WGK[j] * ((fv1[j][i] - mean).abs() + (fv2[j][i] - mean).abs());
        }
        resasc *= hl.abs();
        let e = if resasc != 0.0 && raw != 0.0 {
            resasc * (200.0 * raw / resasc).powf(1.5).min(1.0)
        } else {
            raw
        };
        err = err.max(e);
    }
    let resabs = resabs * hl.abs();
    // Never claim accuracy below the roundoff of the sums themselves.
    err = err.max(50.0 * f64::EPSILON * resabs);
    (integral, err, resabs)
}

/// Adaptive Gauss-Kronrod integration of f over [a, b].
///
/// Panels are accepted when the embedded error estimate is at most
/// `rel_tol` of the local L1 mass (plus `abs_floor` as an absolute escape for
/// regions where the integrand vanishes identically). `splits` lists interior
/// points where the integrand is known to be non-smooth; panels never span
/// them.
pub fn adaptive_gk<const N: usize>(
    f: &(dyn Fn(f64) -> [f64; N] + '_),
    a: f64,
    b: f64,
    splits: &[f64],
    rel_tol: f64,
    abs_floor: f64,
) -> Result<[f64; N]> {
    if a == b {
        return Ok([0.0; N]);
    }
    let mut pts: Vec<f64> = vec![a, b];
    pts.extend(splits.iter().copied().filter(|&s| s > a && s < b));
    pts.sort_by(|x, y| x.partial_cmp(y).expect("non-finite split point"));
    pts.dedup();

    let mut total = [0.0; N];
    for w in pts.windows(2) {
        let part = adapt_panel(f, w[0], w[1], rel_tol, abs_floor, 0)?;
        for i in 0..N {
            total[i] += part[i];
        }
    }
    Ok(total)
}

fn adapt_panel<const N: usize>(
    f: &(dyn Fn(f64) -> [f64; N] + '_),
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
    depth: u32,
) -> Result<[f64; N]> {
    let (integral, err, resabs) = gk15(f, a, b);
    if err <= rel_tol * resabs + abs_floor {
        return Ok(integral);
    }
    if depth >= 48 || (b - a) < f64::EPSILON * (a.abs() + b.abs() + 1.0) {
        return Err(Error::numerical(format!(
            "quadrature panel [{a:e}, {b:e}] did not converge: error {err:e}, local mass {resabs:e}"
        )));
    }
    let mid = 0.5 * (a + b);
    let left = adapt_panel(f, a, mid, rel_tol, abs_floor, depth + 1)?;
    let right = adapt_panel(f, mid, b, rel_tol, abs_floor, depth + 1)?;
    let mut sum = [0.0; N];
    for i in 0..N {
        sum[i] = left[i] + right[i];
    }
    Ok(sum)
}

/// Cumulative primitive F(x) = integral of f from `start` to x, tabulated on
/// an adaptively refined grid and evaluated as "nearest node below + one
/// Kronrod panel for the remainder".
///
/// The node set contains the requested base grid, every breakpoint, and any
/// bisection nodes introduced while a panel was above tolerance, so the
/// partial panel of an evaluation always lies inside an accepted leaf panel.
pub struct CumulativeTable<const N: usize> {
    f: Box<dyn Fn(f64) -> [f64; N] + Send + Sync>,
    nodes: Vec<f64>,
    values: Vec<[f64; N]>,
}

impl<const N: usize> CumulativeTable<N> {
    /// Build the table on [start, end] with panels no wider than `base_step`,
    /// split at `breakpoints`, each panel integrated to `rel_tol` of its local
    /// mass.
    pub fn build(
        f: Box<dyn Fn(f64) -> [f64; N] + Send + Sync>,
        start: f64,
        end: f64,
        base_step: f64,
        breakpoints: &[f64],
        rel_tol: f64,
    ) -> Result<Self> {
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::domain(format!("invalid table range [{start}, {end}]")));
        }
        if !(base_step > 0.0) {
            return Err(Error::domain(format!("invalid table step {base_step}")));
        }

        let mut grid: Vec<f64> = Vec::new();
        let n_steps = ((end - start) / base_step).ceil().max(1.0) as usize;
        for i in 0..=n_steps {
            grid.push(start + (end - start) * (i as f64) / (n_steps as f64));
        }
        grid.extend(breakpoints.iter().copied().filter(|&b| b > start && b < end));
        grid.sort_by(|x, y| x.partial_cmp(y).expect("non-finite breakpoint"));
        grid.dedup_by(|a, b| (*a - *b).abs() <= base_step * 1e-9);
        // dedup_by removes the *first* of the pair; make sure the range ends
        // survive exactly.
        grid[0] = start;
        *grid.last_mut().expect("grid non-empty") = end;

        // Global scale for the absolute floor below: where the integrand is
        // many orders below its typical magnitude (deep envelope tails), the
        // Kronrod-Gauss difference bottoms out at the evaluation noise of the
        // integrand and no amount of bisection lowers the panel-relative
        // ratio. Accepting such panels against a width-proportional share of
        // rel_tol * resabs_total keeps the total error bound intact and the
        // refinement tree finite.
        let mut resabs_total = 0.0;
        for w in grid.windows(2) {
            resabs_total += gk15(&*f, w[0], w[1]).2;
        }
        let floor_per_width = rel_tol * resabs_total / (end - start);

        // Refine each panel until accepted, recording leaf nodes.
        let mut nodes = vec![grid[0]];
        let mut values = vec![[0.0; N]];
        let mut acc = [0.0; N];
        for w in grid.windows(2) {
            let mut stack = vec![(w[0], w[1], 0u32)];
            while let Some((a, b, depth)) = stack.pop() {
                let (integral, err, resabs) = gk15(&*f, a, b);
                let tol = rel_tol * resabs + floor_per_width * (b - a) + 1e-300;
                if err <= tol || depth >= 48 {
                    if depth >= 48 && err > tol {
                        return Err(Error::numerical(format!(
                            "primitive table panel [{a:e}, {b:e}] did not converge (error {err:e})"
                        )));
                    }
                    for i in 0..N {
                        acc[i] += integral[i];
                    }
                    nodes.push(b);
                    values.push(acc);
                } else {
                    let mid = 0.5 * (a + b);
                    // Depth-first, left first: push right before left.
                    stack.push((mid, b, depth + 1));
                    stack.push((a, mid, depth + 1));
                }
            }
        }

        Ok(CumulativeTable { f, nodes, values })
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        *self.nodes.last().expect("table non-empty")
    }

    /// Cumulative value at the right end of the table.
    pub fn value_at_end(&self) -> [f64; N] {
        *self.values.last().expect("table non-empty")
    }

    /// Evaluate F(x). Outside the table the value clamps: 0 before `start`,
    /// the full integral after `end` (callers add their own ballistic
    /// extension when the integrand is known to continue). Inside, the
    /// partial panel re-uses the stored integrand, so each call costs one
    /// 15-point panel.
    pub fn eval(&self, x: f64) -> [f64; N] {
        if x <= self.start() {
            return [0.0; N];
        }
        if x >= self.end() {
            return self.value_at_end();
        }
        // Last node <= x.
        let idx = match self.nodes.binary_search_by(|n| n.partial_cmp(&x).expect("NaN")) {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let (partial, _, _) = gk15(&*self.f, self.nodes[idx], x);
        let mut out = self.values[idx];
        for i in 0..N {
            out[i] += partial[i];
        }
        out
    }

    /// Evaluate the integrand itself.
    pub fn integrand(&self, x: f64) -> [f64; N] {
        (self.f)(x)
    }

    /// Tabulated nodes (strictly increasing).
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Cumulative values at `nodes()`.
    pub fn node_values(&self) -> &[[f64; N]] {
        &self.values
    }
}
