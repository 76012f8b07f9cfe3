use multifold::Complex;

/// Parses `"re,im"`, `"re+imi"`, `"re-imi"`, `"imi"` or a bare real.
/// Scientific notation is accepted and parsing ignores the locale.
pub fn parse_complex(text: &str) -> Result<Complex, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("malformed complex literal {text:?} (expected \"re,im\" or \"re+imi\")");
    if s.is_empty() {
        return Err(bad());
    }
    let real = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let finite = |z: Complex| if z.re.is_finite() && z.im.is_finite() { Ok(z) } else { Err(bad()) };

    if let Some((re, im)) = s.split_once(',') {
        return finite(Complex::new(real(re)?, real(im)?));
    }
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return finite(Complex::new(real(&s)?, 0.0));
    };
    // the sign that splits real from imaginary part: the last one that is
    // neither leading nor part of an exponent
    let bytes = body.as_bytes();
    let split =
        (1..bytes.len()).rev().find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let coefficient = |t: &str| match t {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => real(t),
    };
    match split {
        Some(k) => finite(Complex::new(real(&body[..k])?, coefficient(&body[k..])?)),
        None => finite(Complex::new(0.0, coefficient(body)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn accepted_forms() {
        assert_eq!(parse_complex("0.1,0.2").unwrap(), c(0.1, 0.2));
        assert_eq!(parse_complex(" -1e-3 , 2E2 ").unwrap(), c(-1e-3, 200.0));
        assert_eq!(parse_complex("0.5").unwrap(), c(0.5, 0.0));
        assert_eq!(parse_complex("0.1+0.2i").unwrap(), c(0.1, 0.2));
        assert_eq!(parse_complex("0.1-0.2i").unwrap(), c(0.1, -0.2));
        assert_eq!(parse_complex("-1e-3-2e-2i").unwrap(), c(-1e-3, -2e-2));
        assert_eq!(parse_complex("1e+2+3e-1i").unwrap(), c(100.0, 0.3));
        assert_eq!(parse_complex("0.3i").unwrap(), c(0.0, 0.3));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("2+i").unwrap(), c(2.0, 1.0));
        assert_eq!(parse_complex("0,0").unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn rejected_forms() {
        for s in ["", "abc", "1,2,3", "0.1+", "nan", "1,inf", "0,5i", "1..2"] {
            assert!(parse_complex(s).is_err(), "{s}");
        }
    }
}
