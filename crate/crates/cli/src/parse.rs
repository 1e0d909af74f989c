//! Parsers for the textual argument formats: complex numbers, angle
//! fractions and lists or decade ranges of radii.

use parabolica::rays::ExternalAngle;
use parabolica::ComplexValue;

/// Parses `a+bi`, `a-bi`, `a`, `bi` or `a,b`.
pub fn complex(s: &str) -> Result<ComplexValue, String> {
    let s: String = s.chars().filter(|ch| !ch.is_whitespace()).collect();
    let bad = || format!("invalid complex number '{s}' (expected a+bi or a,b)");
    if let Some((re, im)) = s.split_once(',') {
        return Ok(ComplexValue::new(
            finite(re).map_err(|_| bad())?,
            finite(im).map_err(|_| bad())?,
        ));
    }
    let Some(body) = s.strip_suffix('i') else {
        return finite(&s)
            .map(|re| ComplexValue::new(re, 0.0))
            .map_err(|_| bad());
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    Ok(ComplexValue::new(
        finite(re).map_err(|_| bad())?,
        finite(im).map_err(|_| bad())?,
    ))
}

fn finite(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("invalid number '{s}'"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("number '{s}' is not finite"))
    }
}

/// Parses `p/q` into a reduced external angle in `[0, 1)`.
pub fn angle(s: &str) -> Result<ExternalAngle, String> {
    let (num, den) = s
        .split_once('/')
        .ok_or_else(|| format!("invalid angle '{s}' (expected p/q)"))?;
    let num: u64 = num
        .trim()
        .parse()
        .map_err(|_| format!("invalid angle numerator in '{s}'"))?;
    let den: u64 = den
        .trim()
        .parse()
        .map_err(|_| format!("invalid angle denominator in '{s}'"))?;
    if num >= den {
        return Err(format!("angle '{s}' must lie in [0, 1)"));
    }
    ExternalAngle::new(num, den).map_err(|e| e.to_string())
}

/// A list of circle radii; a newtype so clap treats it as one value.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphas(pub Vec<f64>);

/// [`alphas`] wrapped for use as a clap value parser.
pub fn alpha_list(s: &str) -> Result<Alphas, String> {
    alphas(s).map(Alphas)
}

/// Parses a comma-separated list of positive radii, or a decade range
/// `1e-1..1e-4` covering both ends.
pub fn alphas(s: &str) -> Result<Vec<f64>, String> {
    let positive = |t: &str| -> Result<f64, String> {
        let v = finite(t.trim())?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(format!("radius '{t}' must be positive"))
        }
    };
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (positive(a)?, positive(b)?);
        let decades = (a / b).log10();
        let steps = decades.abs().round();
        if (decades.abs() - steps).abs() > 1e-9 {
            return Err(format!("range '{s}' must span whole decades"));
        }
        let dir = if b < a { -1.0 } else { 1.0 };
        let start = a.log10();
        return Ok((0..=steps as i32)
            .map(|k| {
                let e = start + dir * k as f64;
                // exact powers of ten print cleanly
                if (e - e.round()).abs() < 1e-12 {
                    format!("1e{}", e.round() as i32).parse().unwrap()
                } else {
                    a * 10f64.powf(dir * k as f64)
                }
            })
            .collect());
    }
    let list: Vec<f64> = s.split(',').map(positive).collect::<Result<_, _>>()?;
    if list.is_empty() {
        return Err("empty radius list".into());
    }
    Ok(list)
}

/// A strictly positive value of type `T`.
pub fn positive<T>(s: &str) -> Result<T, String>
where
    T: std::str::FromStr + PartialOrd + Default,
{
    let v: T = s.parse().map_err(|_| format!("invalid value '{s}'"))?;
    if v > T::default() {
        Ok(v)
    } else {
        Err(format!("value '{s}' must be positive"))
    }
}

/// A positive finite float; accepts exponent notation such as `1e8` for
/// integer-like quantities too.
pub fn positive_f64(s: &str) -> Result<f64, String> {
    let v = finite(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("value '{s}' must be positive"))
    }
}

/// Iteration counts: plain integers or exponent notation (`1e8`).
pub fn count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return if v > 0 {
            Ok(v)
        } else {
            Err("count must be positive".into())
        };
    }
    let v = positive_f64(s)?;
    if v.fract() != 0.0 || v > u64::MAX as f64 {
        return Err(format!("'{s}' is not a whole count"));
    }
    Ok(v as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(complex("0").unwrap(), ComplexValue::new(0.0, 0.0));
        assert_eq!(
            complex("-0.75+0.01i").unwrap(),
            ComplexValue::new(-0.75, 0.01)
        );
        assert_eq!(complex("0.25-0.5i").unwrap(), ComplexValue::new(0.25, -0.5));
        assert_eq!(
            complex("1e-3-2e-4i").unwrap(),
            ComplexValue::new(1e-3, -2e-4)
        );
        assert_eq!(complex("-2.5e+1i").unwrap(), ComplexValue::new(0.0, -25.0));
        assert_eq!(complex("-i").unwrap(), ComplexValue::new(0.0, -1.0));
        assert_eq!(
            complex("-1.125,0.2165").unwrap(),
            ComplexValue::new(-1.125, 0.2165)
        );
        assert!(complex("abc").is_err());
        assert!(complex("1+2j").is_err());
        assert!(complex("nan").is_err());
    }

    #[test]
    fn angles() {
        let a = angle("2/6").unwrap();
        assert_eq!((a.num(), a.den()), (1, 3));
        assert!(angle("3/2").is_err());
        assert!(angle("1").is_err());
        assert!(angle("1/0").is_err());
    }

    #[test]
    fn radius_lists() {
        assert_eq!(alphas("1e-1..1e-4").unwrap(), vec![1e-1, 1e-2, 1e-3, 1e-4]);
        assert_eq!(alphas("1e-3..1e-3").unwrap(), vec![1e-3]);
        assert_eq!(alphas("0.01, 0.002").unwrap(), vec![0.01, 0.002]);
        assert!(alphas("1e-1..3e-3").is_err());
        assert!(alphas("-1").is_err());
        assert!(alphas("0").is_err());
    }

    #[test]
    fn counts() {
        assert_eq!(count("1e8").unwrap(), 100_000_000);
        assert_eq!(count("16384").unwrap(), 16384);
        assert!(count("0").is_err());
        assert!(count("1.5").is_err());
        assert_eq!(positive::<usize>("3").unwrap(), 3);
        assert!(positive::<usize>("0").is_err());
    }
}
