//! Minute-of-day arithmetic shared by the scheduling modules.

use std::fmt;

/// Minutes since midnight. Negative values are allowed for relative offsets.
pub type Minute = i64;

pub const fn hm(hour: i64, minute: i64) -> Minute {
    hour * 60 + minute
}

/// Parses `"HH:MM"` or a bare integer minute count.
pub fn parse_clock(text: &str) -> Option<Minute> {
    let text = text.trim();
    if let Some((h, m)) = text.split_once(':') {
        let h: i64 = h.trim().parse().ok()?;
        let m: i64 = m.trim().parse().ok()?;
        if !(0..60).contains(&m) || h < 0 {
            return None;
        }
        Some(h * 60 + m)
    } else {
        text.parse().ok()
    }
}

/// Formats a minute count as zero-padded `HH:MM`.
pub struct Clock(pub Minute);

impl fmt::Display for Clock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let v = self.0.abs();
        write!(f, "{sign}{:02}:{:02}", v / 60, v % 60)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_clock_strings() {
        assert_eq!(parse_clock("18:00"), Some(1080));
        assert_eq!(parse_clock(" 09:05 "), Some(545));
        assert_eq!(parse_clock("915"), Some(915));
        assert_eq!(parse_clock("12:75"), None);
        assert_eq!(Clock(915).to_string(), "15:15");
        assert_eq!(Clock(-20).to_string(), "-00:20");
    }
}
