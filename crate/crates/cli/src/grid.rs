//! `lo:hi:step` sweep specifications. A bare value is a one-point grid.

pub fn parse_n_grid(spec: &str) -> Result<Vec<usize>, String> {
    let parts = split(spec)?;
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("invalid integer {s:?} in grid {spec:?}"))
    };
    match parts.as_slice() {
        [v] => Ok(vec![parse(v)?]),
        [lo, hi, step] => {
            let (lo, hi, step) = (parse(lo)?, parse(hi)?, parse(step)?);
            if step == 0 || hi < lo {
                return Err(format!("grid {spec:?} needs lo <= hi and step > 0"));
            }
            Ok((lo..=hi).step_by(step).collect())
        }
        _ => unreachable!(),
    }
}

pub fn parse_snr_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts = split(spec)?;
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("invalid number {s:?} in grid {spec:?}"))
    };
    match parts.as_slice() {
        [v] => Ok(vec![parse(v)?]),
        [lo, hi, step] => {
            let (lo, hi, step) = (parse(lo)?, parse(hi)?, parse(step)?);
            if !(step > 0.0) || hi < lo {
                return Err(format!("grid {spec:?} needs lo <= hi and step > 0"));
            }
            // tolerate rounding in (hi - lo) / step so the endpoint is kept
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| lo + i as f64 * step).collect())
        }
        _ => unreachable!(),
    }
}

fn split(spec: &str) -> Result<Vec<&str>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.len() {
        1 | 3 => Ok(parts),
        _ => Err(format!("grid {spec:?} must be `lo:hi:step` or a single value")),
    }
}
