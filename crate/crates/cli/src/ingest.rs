//! Check-in dataset ingestion. One record per line, tab separated:
//! `user <TAB> ISO-8601 timestamp <TAB> latitude <TAB> longitude <TAB> location-id`.
//!
//! Timestamp mode keys records by epoch seconds; location mode by the pair
//! (round(lat * 10^4), round(lon * 10^4)). The record handle is the line
//! ordinal. When the requested size exceeds the file, everything is kept
//! and a warning is printed.

use anyhow::{bail, Context};
use qbtree_core::rtree::MdPair;
use qbtree_core::{KeyRecordPair, Rng};
use std::io::BufRead;
use std::path::Path;

use crate::config::KeyMode;

#[derive(Debug)]
pub enum Ingested {
    Timestamps(Vec<KeyRecordPair>),
    Locations(Vec<MdPair>),
}

pub fn ingest_checkins(
    path: &Path,
    key_mode: KeyMode,
    n: usize,
    rng: &mut Rng,
) -> anyhow::Result<Ingested> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("cannot open dataset {}", path.display()))?;
    let reader = std::io::BufReader::new(file);

    let mut timestamps = Vec::new();
    let mut locations = Vec::new();
    for (ordinal, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = ordinal + 1;
        let mut fields = line.split('\t');
        let _user = next_field(&mut fields, lineno, "user")?;
        let ts = next_field(&mut fields, lineno, "timestamp")?;
        let lat = next_field(&mut fields, lineno, "latitude")?;
        let lon = next_field(&mut fields, lineno, "longitude")?;
        let _loc = next_field(&mut fields, lineno, "location-id")?;

        match key_mode {
            KeyMode::Timestamp => {
                let epoch = epoch_seconds(ts)
                    .with_context(|| format!("line {lineno}: bad timestamp {ts:?}"))?;
                timestamps.push(KeyRecordPair::new(epoch, ordinal as u64));
            }
            KeyMode::Location2d => {
                let lat: f64 = lat
                    .parse()
                    .with_context(|| format!("line {lineno}: bad latitude {lat:?}"))?;
                let lon: f64 = lon
                    .parse()
                    .with_context(|| format!("line {lineno}: bad longitude {lon:?}"))?;
                locations.push(MdPair::new(
                    &[(lat * 1e4).round() as i64, (lon * 1e4).round() as i64],
                    ordinal as u64,
                ));
            }
        }
    }

    let have = match key_mode {
        KeyMode::Timestamp => timestamps.len(),
        KeyMode::Location2d => locations.len(),
    };
    if n > have {
        eprintln!("warning: requested {n} records, dataset has only {have}; using all");
    }

    Ok(match key_mode {
        KeyMode::Timestamp => Ingested::Timestamps(subsample(timestamps, n, rng)),
        KeyMode::Location2d => Ingested::Locations(subsample(locations, n, rng)),
    })
}

fn next_field<'a>(
    fields: &mut impl Iterator<Item = &'a str>,
    lineno: usize,
    name: &str,
) -> anyhow::Result<&'a str> {
    match fields.next() {
        Some(f) => Ok(f),
        None => bail!("line {lineno}: missing field {name}"),
    }
}

/// Seeded uniform subsample of `n` records (partial Fisher-Yates).
fn subsample<T>(mut items: Vec<T>, n: usize, rng: &mut Rng) -> Vec<T> {
    if n >= items.len() {
        return items;
    }
    for i in 0..n {
        let j = i + rng.gen_index(items.len() - i);
        items.swap(i, j);
    }
    items.truncate(n);
    items
}

/// Epoch seconds of an ISO-8601 UTC timestamp `YYYY-MM-DDTHH:MM:SSZ`.
pub fn epoch_seconds(ts: &str) -> anyhow::Result<i64> {
    let ts = ts.strip_suffix('Z').unwrap_or(ts);
    let (date, time) = ts.split_once('T').context("missing 'T' separator")?;
    let mut dp = date.split('-');
    let year: i64 = dp.next().context("year")?.parse()?;
    let month: u32 = dp.next().context("month")?.parse()?;
    let day: u32 = dp.next().context("day")?.parse()?;
    let mut tp = time.split(':');
    let hour: i64 = tp.next().context("hour")?.parse()?;
    let minute: i64 = tp.next().context("minute")?.parse()?;
    let second: i64 = tp.next().context("second")?.parse()?;
    anyhow::ensure!((1..=12).contains(&month), "month out of range");
    anyhow::ensure!((1..=31).contains(&day), "day out of range");
    anyhow::ensure!(
        (0..24).contains(&hour) && (0..60).contains(&minute) && (0..61).contains(&second)
    );
    Ok(days_from_civil(year, month, day) * 86_400 + hour * 3_600 + minute * 60 + second)
}

/// Days since 1970-01-01 of a proleptic Gregorian date.
fn days_from_civil(year: i64, month: u32, day: u32) -> i64 {
    let y = if month <= 2 { year - 1 } else { year };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = (month as i64 + 9) % 12;
    let doy = (153 * mp + 2) / 5 + day as i64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    // Oracle values computed independently with `date -u +%s`.
    #[test]
    fn epoch_conversion_matches_hand_computed_values() {
        assert_eq!(
            epoch_seconds("2010-10-17T01:48:53Z").unwrap(),
            1_287_280_133
        );
        assert_eq!(
            epoch_seconds("2008-10-24T23:22:42Z").unwrap(),
            1_224_890_562
        );
        assert_eq!(epoch_seconds("1970-01-01T00:00:00Z").unwrap(), 0);
        assert_eq!(epoch_seconds("2000-02-29T12:00:00Z").unwrap(), 951_825_600);
    }

    fn fixture_file(tag: &str, content: &str) -> std::path::PathBuf {
        let mut path = std::env::temp_dir();
        path.push(format!("checkins-{}-{tag}.tsv", std::process::id()));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn three_line_fixture_parses_to_epoch_keys() {
        let path = fixture_file(
            "three",
            "0\t2010-10-17T01:48:53Z\t39.747652\t-104.992510\t88c46bf2\n\
             1\t2008-10-24T23:22:42Z\t39.891383\t-105.070814\t7a0f88982aa0\n\
             2\t1970-01-01T00:00:00Z\t0.0\t0.0\tx\n",
        );
        let mut rng = Rng::from_seed(1);
        let Ingested::Timestamps(pairs) =
            ingest_checkins(&path, KeyMode::Timestamp, 10, &mut rng).unwrap()
        else {
            panic!()
        };
        std::fs::remove_file(&path).ok();
        assert_eq!(pairs.len(), 3);
        assert_eq!(pairs[0].key.get(), 1_287_280_133);
        assert_eq!(pairs[1].key.get(), 1_224_890_562);
        assert_eq!(pairs[2].key.get(), 0);
        assert_eq!(pairs[2].rec.0, 2);
    }

    #[test]
    fn location_mode_rounds_to_fourth_decimal() {
        let path = fixture_file(
            "loc",
            "0\t2010-10-17T01:48:53Z\t39.747652\t-104.992510\tx\n",
        );
        let mut rng = Rng::from_seed(1);
        let Ingested::Locations(pairs) =
            ingest_checkins(&path, KeyMode::Location2d, 10, &mut rng).unwrap()
        else {
            panic!()
        };
        std::fs::remove_file(&path).ok();
        assert_eq!(pairs[0].key[0].get(), 397_477);
        assert_eq!(pairs[0].key[1].get(), -1_049_925);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let path = fixture_file(
            "bad",
            "0\t2010-10-17T01:48:53Z\t39.7\t-104.9\tok\nbroken line\n",
        );
        let mut rng = Rng::from_seed(1);
        let err = ingest_checkins(&path, KeyMode::Timestamp, 10, &mut rng).unwrap_err();
        std::fs::remove_file(&path).ok();
        assert!(format!("{err:#}").contains("line 2"), "{err:#}");
    }
}
