//! Golden-section search for a bracketed minimum of a unimodal function.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

/// Narrows `[lo, hi]` until it is shorter than `tol` and returns the best
/// point evaluated. Errors from `f` abort the search.
pub fn golden_section<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Minimum, E> {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut best = if fc <= fd {
        Minimum { x: c, value: fc }
    } else {
        Minimum { x: d, value: fd }
    };

    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            if fc < best.value {
                best = Minimum { x: c, value: fc };
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            if fd < best.value {
                best = Minimum { x: d, value: fd };
            }
        }
    }
    Ok(best)
}
