//! Small numeric helpers: compensated summation, angle wrapping, norms.

use num_complex::Complex64;

/// Neumaier compensated sum. Order-stable and accurate enough that any
/// fixed evaluation order agrees with plain summation to ~1e-15 relative.
pub fn comp_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn comp_sum_c(values: impl IntoIterator<Item = Complex64>) -> Complex64 {
    let mut re = (0.0, 0.0);
    let mut im = (0.0, 0.0);
    for v in values {
        add_comp(&mut re, v.re);
        add_comp(&mut im, v.im);
    }
    Complex64::new(re.0 + re.1, im.0 + im.1)
}

fn add_comp(acc: &mut (f64, f64), v: f64) {
    let t = acc.0 + v;
    if acc.0.abs() >= v.abs() {
        acc.1 += (acc.0 - t) + v;
    } else {
        acc.1 += (v - t) + acc.0;
    }
    acc.0 = t;
}

/// Wraps an angle to the canonical representative in [0, 2*pi).
pub fn wrap_2pi(x: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut y = x % two_pi;
    if y < 0.0 {
        y += two_pi;
    }
    // x % TAU can round up to TAU itself for tiny negative x
    if y >= two_pi {
        y = 0.0;
    }
    y
}

pub fn clamp_unit(t: f64) -> f64 {
    t.clamp(-1.0, 1.0)
}

/// Weighted relative L2 distance between sample vectors.
pub fn rel_l2(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    let num = comp_sum(
        a.iter()
            .zip(b)
            .zip(w)
            .map(|((&x, &y), &wm)| wm * (x - y) * (x - y)),
    );
    let den = comp_sum(b.iter().zip(w).map(|(&y, &wm)| wm * y * y));
    (num / den).sqrt()
}

/// Worker cap: SPHEREOT_THREADS when set, else available parallelism.
pub fn thread_cap() -> usize {
    if let Ok(v) = std::env::var("SPHEREOT_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Indexed parallel map over a slice. Results land in their input slots,
/// so the output is bit-identical for any worker count.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = thread_cap().min(items.len().max(1));
    if threads <= 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    let mut out: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (in_chunk, out_chunk) in items.chunks(chunk).zip(out.chunks_mut(chunk)) {
            scope.spawn(|| {
                for (item, slot) in in_chunk.iter().zip(out_chunk.iter_mut()) {
                    *slot = Some(f(item));
                }
            });
        }
    });
    out.into_iter()
        .map(|r| r.expect("every slot written"))
        .collect()
}

/// Weighted relative L1 distance between sample vectors.
pub fn rel_l1(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    let num = comp_sum(
        a.iter()
            .zip(b)
            .zip(w)
            .map(|((&x, &y), &wm)| wm * (x - y).abs()),
    );
    let den = comp_sum(b.iter().zip(w).map(|(&y, &wm)| wm * y.abs()));
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comp_sum_recovers_cancellation() {
        let vals = [1e16, 1.0, -1e16];
        assert_eq!(comp_sum(vals), 1.0);
    }

    #[test]
    fn wrap_handles_negatives() {
        assert!((wrap_2pi(-0.5) - (std::f64::consts::TAU - 0.5)).abs() < 1e-15);
        assert_eq!(wrap_2pi(0.0), 0.0);
        assert!(wrap_2pi(-1e-20) < std::f64::consts::TAU);
    }
}
