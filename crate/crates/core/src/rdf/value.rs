//! Value-space parsing for the literal datatypes that support comparison.

use std::cmp::Ordering;

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};

/// Exact decimal number: sign, integer digits without leading zeros and
/// fraction digits without trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decimal {
    negative: bool,
    int_digits: String,
    frac_digits: String,
}

impl Decimal {
    pub fn parse(s: &str) -> Option<Self> {
        let (negative, body) = match s.as_bytes().first()? {
            b'-' => (true, &s[1..]),
            b'+' => (false, &s[1..]),
            _ => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let int_digits = int_part.trim_start_matches('0').to_string();
        let frac_digits = frac_part.trim_end_matches('0').to_string();
        let is_zero = int_digits.is_empty() && frac_digits.is_empty();
        Some(Decimal {
            negative: negative && !is_zero,
            int_digits,
            frac_digits,
        })
    }

    fn cmp_magnitude(&self, other: &Self) -> Ordering {
        self.int_digits
            .len()
            .cmp(&other.int_digits.len())
            .then_with(|| self.int_digits.cmp(&other.int_digits))
            .then_with(|| self.frac_digits.cmp(&other.frac_digits))
    }

    pub fn to_f64(&self) -> f64 {
        let text = format!(
            "{}{}.{}",
            if self.negative { "-" } else { "" },
            if self.int_digits.is_empty() { "0" } else { &self.int_digits },
            if self.frac_digits.is_empty() { "0" } else { &self.frac_digits }
        );
        text.parse().unwrap_or(f64::NAN)
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.negative, other.negative) {
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            (false, false) => self.cmp_magnitude(other),
            (true, true) => other.cmp_magnitude(self),
        }
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// xsd:double / xsd:float lexical space.
pub fn parse_double(s: &str) -> Option<f64> {
    match s {
        "INF" | "+INF" => return Some(f64::INFINITY),
        "-INF" => return Some(f64::NEG_INFINITY),
        "NaN" => return Some(f64::NAN),
        _ => {}
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], Some(&s[i + 1..])),
        None => (s, None),
    };
    Decimal::parse(mantissa)?;
    if let Some(exp) = exponent {
        let digits = exp.strip_prefix(['+', '-']).unwrap_or(exp);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
    }
    s.parse().ok()
}

/// Timezone offset in seconds east of UTC.
fn parse_timezone(s: &str) -> Option<Option<i32>> {
    if s.is_empty() {
        return Some(None);
    }
    if s == "Z" {
        return Some(Some(0));
    }
    let sign = match s.as_bytes()[0] {
        b'+' => 1,
        b'-' => -1,
        _ => return None,
    };
    let rest = &s[1..];
    let (hh, mm) = rest.split_once(':')?;
    if hh.len() != 2 || mm.len() != 2 {
        return None;
    }
    let hh: i32 = hh.parse().ok()?;
    let mm: i32 = mm.parse().ok()?;
    if hh > 14 || mm > 59 || (hh == 14 && mm != 0) {
        return None;
    }
    Some(Some(sign * (hh * 3600 + mm * 60)))
}

fn fixed_digits(s: &str, n: usize) -> Option<u32> {
    (s.len() == n && s.bytes().all(|b| b.is_ascii_digit())).then(|| s.parse().ok())?
}

/// Parses `-?YYYY-MM-DD` and returns the remainder.
fn parse_date_prefix(s: &str) -> Option<(NaiveDate, &str)> {
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let year_len = body.bytes().take_while(|b| b.is_ascii_digit()).count();
    if year_len < 4 || (year_len > 4 && body.starts_with('0')) {
        return None;
    }
    let year: i32 = body[..year_len].parse().ok()?;
    let rest = body[year_len..].strip_prefix('-')?;
    if rest.len() < 5 {
        return None;
    }
    let month = fixed_digits(&rest[..2], 2)?;
    let rest = rest[2..].strip_prefix('-')?;
    let day = fixed_digits(rest.get(..2)?, 2)?;
    let year = if negative { -year } else { year };
    let date = NaiveDate::from_ymd_opt(year, month, day)?;
    Some((date, &rest[2..]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateValue {
    pub date: NaiveDate,
    pub timezone: Option<i32>,
}

impl DateValue {
    pub fn parse(s: &str) -> Option<Self> {
        let (date, rest) = parse_date_prefix(s)?;
        let timezone = parse_timezone(rest)?;
        Some(DateValue { date, timezone })
    }

    /// Chronological order of the days' starting instants.
    pub fn compare(&self, other: &Self) -> Option<Ordering> {
        compare_instants(
            self.date.and_time(NaiveTime::MIN),
            self.timezone,
            other.date.and_time(NaiveTime::MIN),
            other.timezone,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateTimeValue {
    pub datetime: NaiveDateTime,
    pub timezone: Option<i32>,
}

impl DateTimeValue {
    pub fn parse(s: &str) -> Option<Self> {
        let (date, rest) = parse_date_prefix(s)?;
        let rest = rest.strip_prefix('T')?;
        if rest.len() < 8 {
            return None;
        }
        let hour = fixed_digits(&rest[..2], 2)?;
        let minute = fixed_digits(rest.get(3..5)?, 2)?;
        let second = fixed_digits(rest.get(6..8)?, 2)?;
        if &rest[2..3] != ":" || &rest[5..6] != ":" {
            return None;
        }
        let mut tail = &rest[8..];
        let mut nanos = 0u32;
        if let Some(frac) = tail.strip_prefix('.') {
            let len = frac.bytes().take_while(|b| b.is_ascii_digit()).count();
            if len == 0 {
                return None;
            }
            let digits = &frac[..len];
            let padded: String = digits.chars().chain(std::iter::repeat('0')).take(9).collect();
            nanos = padded.parse().ok()?;
            tail = &frac[len..];
        }
        let time = NaiveTime::from_hms_nano_opt(hour, minute, second, nanos)?;
        let timezone = parse_timezone(tail)?;
        Some(DateTimeValue {
            datetime: date.and_time(time),
            timezone,
        })
    }

    pub fn compare(&self, other: &Self) -> Option<Ordering> {
        compare_instants(self.datetime, self.timezone, other.datetime, other.timezone)
    }
}

/// XML Schema order on instants. A value without timezone is compared under
/// both +14:00 and -14:00; `None` when the two readings disagree.
fn compare_instants(a: NaiveDateTime, atz: Option<i32>, b: NaiveDateTime, btz: Option<i32>) -> Option<Ordering> {
    let utc = |d: NaiveDateTime, tz: i32| d - Duration::seconds(tz as i64);
    let span = Duration::hours(14);
    match (atz, btz) {
        (None, None) => Some(a.cmp(&b)),
        (Some(x), Some(y)) => Some(utc(a, x).cmp(&utc(b, y))),
        (None, Some(y)) => {
            let b = utc(b, y);
            let early = (a - span).cmp(&b);
            let late = (a + span).cmp(&b);
            (early == late).then_some(early)
        }
        (Some(_), None) => compare_instants(b, btz, a, atz).map(Ordering::reverse),
    }
}
