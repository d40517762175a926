//! Grid arguments: `start:step:stop` (inclusive) or a comma list.

/// Parses `0:2:12` or `0.9,0.99,1`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, step, stop] = parts.as_slice() else {
            return Err(format!("range `{s}` must be start:step:stop"));
        };
        let (start, step, stop) = (number(start)?, number(step)?, number(stop)?);
        if !(step > 0.0) {
            return Err(format!("range `{s}` needs a positive step"));
        }
        if stop < start {
            return Err(format!("range `{s}` ends before it starts"));
        }
        // tolerate rounding in (stop - start) / step
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| start + i as f64 * step).collect());
    }
    s.split(',').map(number).collect()
}

fn number(s: &str) -> Result<f64, String> {
    let t = s.trim();
    t.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("`{t}` is not a finite number"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_range() {
        assert_eq!(parse_grid("0:2:12").unwrap(), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0]);
        assert_eq!(parse_grid("0:0.1:0.3").unwrap().len(), 4);
        assert_eq!(parse_grid("5:1:5").unwrap(), vec![5.0]);
    }

    #[test]
    fn comma_list() {
        assert_eq!(parse_grid("0.9, 0.99,1.0").unwrap(), vec![0.9, 0.99, 1.0]);
        assert_eq!(parse_grid("").unwrap(), Vec::<f64>::new());
    }

    #[test]
    fn malformed() {
        assert!(parse_grid("0:0:4").is_err());
        assert!(parse_grid("4:1:0").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("1,nan").is_err());
    }
}
