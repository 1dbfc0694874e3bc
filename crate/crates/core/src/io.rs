//! Text formats and derivation of mining inputs from schedules.
//!
//! Every format is UTF-8 text where `#` starts a comment that runs to the end
//! of the line and blank lines are ignored.
//!
//! Instance file:
//!
//! ```text
//! [meta]
//! n=5 days=7 shifts=3 y=2
//! [coverage]            # one line per shift, one q/p pair per day
//! 1/4 1/4 1/4 1/4 1/4 1/4 1/4
//! ...
//! [limits]              # nurse label, h_i, b_i, optional minimum shifts
//! nurse_1 5 3
//! ...
//! [costs]               # n rows of m costs
//! 2 1 4
//! [domain]              # optional: m patterns, one per cost column
//! 1001
//! ```
//!
//! Tokens inside a section may be separated by commas or whitespace. When
//! `[domain]` is missing, the cost matrix must have one column per possible
//! pattern (`2^(days*shifts)`), in increasing bit order.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Horizon, NspInstance, Schedule, ShiftPattern, WcspInstance};
use crate::rational::{format_rational, is_non_negative, parse_rational, Rational};

/// Index into a database's item universe.
pub type ItemId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionDb {
    pub universe: Vec<String>,
    pub labels: Vec<String>,
    pub transactions: Vec<BTreeSet<ItemId>>,
}

impl TransactionDb {
    pub fn new(
        universe: Vec<String>,
        labels: Vec<String>,
        transactions: Vec<BTreeSet<ItemId>>,
    ) -> Result<Self> {
        if labels.len() != transactions.len() {
            return Err(Error::Shape(format!(
                "{} labels for {} transactions",
                labels.len(),
                transactions.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::Consistency(format!("duplicate transaction label {dup:?}")));
        }
        if let Some(bad) = transactions.iter().flatten().find(|&&i| i >= universe.len()) {
            return Err(Error::Consistency(format!("item {bad} outside the universe")));
        }
        Ok(TransactionDb {
            universe,
            labels,
            transactions,
        })
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn item_names(&self, items: &[ItemId]) -> Vec<String> {
        items.iter().map(|&i| self.universe[i].clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantityRow {
    pub label: String,
    /// Positive internal quantities only; absent items have quantity 0.
    pub quantities: BTreeMap<ItemId, u32>,
}

impl QuantityRow {
    pub fn quantity(&self, item: ItemId) -> u32 {
        self.quantities.get(&item).copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantityDb {
    pub universe: Vec<String>,
    pub rows: Vec<QuantityRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtilityTable {
    pub utilities: BTreeMap<ItemId, Rational>,
}

impl UtilityTable {
    pub fn get(&self, item: ItemId) -> Option<Rational> {
        self.utilities.get(&item).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Granularity {
    /// One transaction per day; items are nurses working at least one shift.
    Day,
    /// One transaction per (day, shift) slot.
    DayShift,
}

/// Lines with comments stripped, paired with their one-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
}

fn parse_u32(token: &str, line: usize, what: &str) -> Result<u32> {
    token
        .parse()
        .map_err(|_| Error::parse(line, format!("{what}: expected a non-negative integer, got {token:?}")))
}

#[derive(Default)]
struct Sections<'a> {
    order: Vec<&'a str>,
    blocks: BTreeMap<&'a str, Vec<(usize, &'a str)>>,
}

fn split_sections(text: &str) -> Result<Sections<'_>> {
    const KNOWN: [&str; 5] = ["meta", "coverage", "limits", "costs", "domain"];
    let mut sections = Sections::default();
    let mut current: Option<&str> = None;
    for (line_no, line) in content_lines(text) {
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !KNOWN.contains(&name) {
                return Err(Error::parse(line_no, format!("unknown section [{name}]")));
            }
            if sections.blocks.contains_key(name) {
                return Err(Error::parse(line_no, format!("duplicate section [{name}]")));
            }
            sections.order.push(name);
            sections.blocks.insert(name, Vec::new());
            current = Some(name);
            continue;
        }
        let Some(name) = current else {
            return Err(Error::parse(line_no, "content before the first section"));
        };
        sections.blocks.get_mut(name).unwrap().push((line_no, line));
    }
    Ok(sections)
}

fn require<'s, 'a>(sections: &'s Sections<'a>, name: &str) -> Result<&'s [(usize, &'a str)]> {
    sections
        .blocks
        .get(name)
        .map(Vec::as_slice)
        .ok_or_else(|| Error::parse(0, format!("missing section [{name}]")))
}

fn parse_sections(sections: &Sections<'_>) -> Result<NspInstance> {
    let meta = require(sections, "meta")?;
    let mut fields = BTreeMap::new();
    for &(line_no, line) in meta {
        for tok in tokens(line) {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, format!("expected key=value, got {tok:?}")))?;
            let v = parse_u32(v, line_no, k)?;
            if fields.insert(k.to_string(), (line_no, v)).is_some() {
                return Err(Error::parse(line_no, format!("duplicate key {k}")));
            }
        }
    }
    let meta_line = meta.first().map_or(0, |m| m.0);
    let get = |key: &str| {
        fields
            .get(key)
            .map(|&(_, v)| v)
            .ok_or_else(|| Error::parse(meta_line, format!("[meta] is missing {key}")))
    };
    for (key, &(line_no, _)) in &fields {
        if !["n", "days", "shifts", "y", "max_per_day"].contains(&key.as_str()) {
            return Err(Error::parse(line_no, format!("unknown meta key {key}")));
        }
    }
    let n = get("n")? as usize;
    if n == 0 {
        return Err(Error::parse(meta_line, "instance has no nurses (n=0)"));
    }
    let horizon = Horizon::new(get("days")? as usize, get("shifts")? as usize)
        .map_err(|e| Error::parse(meta_line, e.to_string()))?;
    let y = get("y")?;
    let max_per_day = fields.get("max_per_day").map(|&(_, v)| v);

    let (s, k) = (horizon.shifts_per_day, horizon.days);
    let coverage = require(sections, "coverage")?;
    if coverage.len() != s {
        return Err(Error::parse(
            coverage.first().map_or(0, |c| c.0),
            format!("[coverage] needs {s} shift rows, found {}", coverage.len()),
        ));
    }
    let mut min_cover = vec![vec![0; k]; s];
    let mut max_cover = vec![vec![0; k]; s];
    for (sh, &(line_no, line)) in coverage.iter().enumerate() {
        let cells: Vec<&str> = tokens(line).collect();
        if cells.len() != k {
            return Err(Error::parse(
                line_no,
                format!("expected {k} q/p pairs, found {}", cells.len()),
            ));
        }
        for (d, cell) in cells.iter().enumerate() {
            let (q, p) = cell
                .split_once('/')
                .ok_or_else(|| Error::parse(line_no, format!("expected q/p, got {cell:?}")))?;
            let q = parse_u32(q, line_no, "q")?;
            let p = parse_u32(p, line_no, "p")?;
            if q > p {
                return Err(Error::parse(
                    line_no,
                    format!("q > p for shift {} day {} ({q} > {p})", sh + 1, d + 1),
                ));
            }
            min_cover[sh][d] = q;
            max_cover[sh][d] = p;
        }
    }

    let limits = require(sections, "limits")?;
    let mut max_shifts = vec![None; n];
    let mut max_nights = vec![0; n];
    let mut min_shifts = vec![0; n];
    for &(line_no, line) in limits {
        let cells: Vec<&str> = tokens(line).collect();
        if !(3..=4).contains(&cells.len()) {
            return Err(Error::parse(line_no, "expected `nurse_i h b [min_shifts]`"));
        }
        let idx = cells[0]
            .to_ascii_lowercase()
            .strip_prefix("nurse_")
            .and_then(|i| i.parse::<usize>().ok())
            .filter(|&i| (1..=n).contains(&i))
            .ok_or_else(|| Error::parse(line_no, format!("bad nurse label {:?}", cells[0])))?;
        if max_shifts[idx - 1].is_some() {
            return Err(Error::parse(line_no, format!("duplicate limits for {}", cells[0])));
        }
        max_shifts[idx - 1] = Some(parse_u32(cells[1], line_no, "h")?);
        max_nights[idx - 1] = parse_u32(cells[2], line_no, "b")?;
        if let Some(min) = cells.get(3) {
            min_shifts[idx - 1] = parse_u32(min, line_no, "min shifts")?;
        }
    }
    let max_shifts = max_shifts
        .into_iter()
        .enumerate()
        .map(|(i, h)| {
            h.ok_or_else(|| Error::parse(limits.last().map_or(0, |l| l.0), format!("no limits for nurse_{}", i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;

    let cost_lines = require(sections, "costs")?;
    if cost_lines.len() != n {
        return Err(Error::parse(
            cost_lines.first().map_or(0, |c| c.0),
            format!("[costs] needs {n} rows, found {}", cost_lines.len()),
        ));
    }
    let mut cost = Vec::with_capacity(n);
    for &(line_no, line) in cost_lines {
        let row = tokens(line)
            .map(|t| parse_rational(t).map_err(|e| Error::parse(line_no, e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        if row.iter().any(|c| !is_non_negative(c)) {
            return Err(Error::parse(line_no, "negative cost"));
        }
        if let Some(first) = cost.first().map(Vec::len) {
            if row.len() != first {
                return Err(Error::parse(
                    line_no,
                    format!("cost row has {} entries, expected {first}", row.len()),
                ));
            }
        }
        cost.push(row);
    }

    let inst = NspInstance {
        horizon,
        cost,
        min_cover,
        max_cover,
        max_shifts,
        min_shifts,
        max_night_morning: y,
        max_nights,
        max_shifts_per_day: max_per_day,
    };
    inst.validate().map_err(|e| Error::parse(0, e.to_string()))?;
    Ok(inst)
}

pub fn parse_instance(text: &str) -> Result<NspInstance> {
    parse_sections(&split_sections(text)?)
}

/// Parses an instance plus its domain into a ready-to-solve WCSP.
pub fn parse_wcsp(text: &str) -> Result<WcspInstance> {
    let sections = split_sections(text)?;
    let instance = parse_sections(&sections)?;
    let horizon = instance.horizon;
    let m = instance.patterns();
    let domain = match sections.blocks.get("domain") {
        Some(lines) => {
            let domain = lines
                .iter()
                .map(|&(line_no, line)| {
                    ShiftPattern::parse(line, horizon).map_err(|e| Error::parse(line_no, e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            if domain.len() != m {
                return Err(Error::parse(
                    lines.first().map_or(0, |l| l.0),
                    format!("[domain] lists {} patterns for {m} cost columns", domain.len()),
                ));
            }
            domain
        }
        None => {
            let slots = horizon.slots();
            if slots >= 32 || m != 1usize << slots {
                return Err(Error::parse(
                    0,
                    format!("no [domain] section and {m} cost columns is not 2^{slots}"),
                ));
            }
            (0..m as u64)
                .map(|bits| ShiftPattern::from_bits(bits, horizon))
                .collect::<Result<Vec<_>>>()?
        }
    };
    WcspInstance::new(instance, domain)
}

pub fn serialize_instance(inst: &NspInstance) -> String {
    let mut out = String::new();
    write_instance_body(&mut out, inst);
    out
}

pub fn serialize_wcsp(wcsp: &WcspInstance) -> String {
    let mut out = String::new();
    write_instance_body(&mut out, &wcsp.instance);
    out.push_str("[domain]\n");
    for p in &wcsp.domain {
        let _ = writeln!(out, "{p}");
    }
    out
}

fn write_instance_body(out: &mut String, inst: &NspInstance) {
    let h = inst.horizon;
    out.push_str("[meta]\n");
    let _ = write!(
        out,
        "n={} days={} shifts={} y={}",
        inst.nurses(),
        h.days,
        h.shifts_per_day,
        inst.max_night_morning
    );
    if let Some(d) = inst.max_shifts_per_day {
        let _ = write!(out, " max_per_day={d}");
    }
    out.push_str("\n[coverage]\n");
    for sh in 0..h.shifts_per_day {
        let row: Vec<String> = (0..h.days)
            .map(|d| format!("{}/{}", inst.min_cover[sh][d], inst.max_cover[sh][d]))
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out.push_str("[limits]\n");
    for i in 0..inst.nurses() {
        let _ = write!(out, "nurse_{} {} {}", i + 1, inst.max_shifts[i], inst.max_nights[i]);
        if inst.min_shifts[i] != 0 {
            let _ = write!(out, " {}", inst.min_shifts[i]);
        }
        out.push('\n');
    }
    out.push_str("[costs]\n");
    for row in &inst.cost {
        let row: Vec<String> = row.iter().map(format_rational).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

fn parse_slot_label(label: &str) -> Option<(usize, usize)> {
    let rest = label.trim().strip_prefix("Day")?.trim_start_matches('_');
    let (day, shift) = rest.split_once("Shift")?;
    let shift = shift.trim_start_matches('_');
    Some((day.parse().ok()?, shift.parse().ok()?))
}

/// Reads a schedule CSV: header of `Day{k}Shift{s}` labels, one 0/1 row per
/// nurse, optionally preceded by a nurse-label column.
pub fn parse_schedule_csv(text: &str) -> Result<Schedule> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines.next().ok_or_else(|| Error::parse(0, "empty schedule"))?;
    let header: Vec<&str> = header.split(',').map(str::trim).collect();
    let labelled = parse_slot_label(header[0]).is_none();
    let slot_cells = if labelled { &header[1..] } else { &header[..] };
    let slots: Vec<(usize, usize)> = slot_cells
        .iter()
        .map(|c| {
            parse_slot_label(c)
                .ok_or_else(|| Error::parse(header_line, format!("bad slot label {c:?}")))
        })
        .collect::<Result<_>>()?;
    let days = slots.iter().map(|s| s.0).max().unwrap_or(0);
    let shifts = slots.iter().map(|s| s.1).max().unwrap_or(0);
    let horizon = Horizon::new(days, shifts).map_err(|e| Error::parse(header_line, e.to_string()))?;
    for (z, &(d, s)) in slots.iter().enumerate() {
        if horizon.slot(d, s).ok() != Some(z) || slots.len() != horizon.slots() {
            return Err(Error::parse(
                header_line,
                "slot columns must list every Day{k}Shift{s} in day-major order",
            ));
        }
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for (line_no, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let cells = if labelled { &cells[1..] } else { &cells[..] };
        if cells.len() != horizon.slots() {
            return Err(Error::parse(
                line_no,
                format!("expected {} cells, found {}", horizon.slots(), cells.len()),
            ));
        }
        for c in cells {
            data.push(match *c {
                "0" => 0u8,
                "1" => 1u8,
                other => return Err(Error::parse(line_no, format!("cell {other:?} is not 0/1"))),
            });
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::parse(header_line, "schedule has no nurse rows"));
    }
    let entries = Array2::from_shape_vec((rows, horizon.slots()), data)
        .map_err(|e| Error::Shape(e.to_string()))?;
    Schedule::new(entries, horizon)
}

pub fn write_schedule_csv(schedule: &Schedule) -> String {
    let h = schedule.horizon();
    let mut out = String::from("nurse");
    for z in 0..h.slots() {
        out.push(',');
        out.push_str(&h.slot_label(z));
    }
    out.push('\n');
    for i in 0..schedule.nurses() {
        let _ = write!(out, "Nurse_{}", i + 1);
        for z in 0..h.slots() {
            out.push_str(if schedule.get(i, z) { ",1" } else { ",0" });
        }
        out.push('\n');
    }
    out
}

/// Orders `Nurse_2` before `Nurse_10`.
fn natural_key(name: &str) -> (String, u64, String) {
    let digits_at = name
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_ascii_digit())
        .last()
        .map(|(i, _)| i);
    match digits_at {
        Some(i) => (
            name[..i].to_string(),
            name[i..].parse().unwrap_or(u64::MAX),
            name.to_string(),
        ),
        None => (name.to_string(), 0, name.to_string()),
    }
}

const UNIVERSE_LABEL: &str = "@universe";

/// Reads `label,item1;item2;...` lines. An optional leading
/// `@universe,...` line fixes the item universe; otherwise it is every item
/// seen, in natural order.
pub fn parse_transactions(text: &str) -> Result<TransactionDb> {
    let mut declared: Option<Vec<String>> = None;
    let mut raw: Vec<(usize, String, Vec<String>)> = Vec::new();
    for (line_no, line) in content_lines(text) {
        let (label, items) = line.split_once(',').unwrap_or((line, ""));
        let label = label.trim();
        let items: Vec<String> = items
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        if label == UNIVERSE_LABEL {
            if declared.is_some() || !raw.is_empty() {
                return Err(Error::parse(line_no, "@universe must be the first line"));
            }
            declared = Some(items);
            continue;
        }
        if label.is_empty() {
            return Err(Error::parse(line_no, "empty transaction label"));
        }
        raw.push((line_no, label.to_string(), items));
    }
    let universe = match declared {
        Some(u) => u,
        None => {
            let mut all: Vec<String> = raw
                .iter()
                .flat_map(|r| r.2.iter().cloned())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            natural_sort(&mut all);
            all
        }
    };
    let index: BTreeMap<&str, usize> = universe
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut labels = Vec::new();
    let mut transactions = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, label, items) in &raw {
        if !seen.insert(label.as_str()) {
            return Err(Error::parse(*line_no, format!("duplicate label {label:?}")));
        }
        let set = items
            .iter()
            .map(|it| {
                index.get(it.as_str()).copied().ok_or_else(|| {
                    Error::parse(*line_no, format!("item {it:?} is not in the universe"))
                })
            })
            .collect::<Result<BTreeSet<_>>>()?;
        labels.push(label.clone());
        transactions.push(set);
    }
    TransactionDb::new(universe, labels, transactions)
}

pub fn write_transactions(db: &TransactionDb) -> String {
    let mut out = format!("{UNIVERSE_LABEL},{}\n", db.universe.join(";"));
    for (label, items) in db.labels.iter().zip(&db.transactions) {
        let names: Vec<&str> = items.iter().map(|&i| db.universe[i].as_str()).collect();
        let _ = writeln!(out, "{label},{}", names.join(";"));
    }
    out
}

pub fn schedule_to_transactions(schedule: &Schedule, granularity: Granularity) -> TransactionDb {
    let h = schedule.horizon();
    let universe = (1..=schedule.nurses()).map(|i| format!("Nurse_{i}")).collect();
    let mut labels = Vec::new();
    let mut transactions = Vec::new();
    match granularity {
        Granularity::Day => {
            for d in 0..h.days {
                let slots = d * h.shifts_per_day..(d + 1) * h.shifts_per_day;
                let items = (0..schedule.nurses())
                    .filter(|&i| slots.clone().any(|z| schedule.get(i, z)))
                    .collect();
                labels.push(format!("Day_{}", d + 1));
                transactions.push(items);
            }
        }
        Granularity::DayShift => {
            for z in 0..h.slots() {
                let (day, shift) = h.day_shift(z);
                let items = (0..schedule.nurses()).filter(|&i| schedule.get(i, z)).collect();
                labels.push(format!("Day_{day}Shift_{shift}"));
                transactions.push(items);
            }
        }
    }
    TransactionDb {
        universe,
        labels,
        transactions,
    }
}

const UTILITY_LABEL: &str = "@utility";

/// Reads a quantity table: header `label,item...`, one row of non-negative
/// integer quantities per transaction, and a final `@utility,...` row with
/// each item's external utility.
pub fn parse_quantity_table(text: &str) -> Result<(QuantityDb, UtilityTable)> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines.next().ok_or_else(|| Error::parse(0, "empty table"))?;
    let universe: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
    if universe.is_empty() || universe.iter().any(String::is_empty) {
        return Err(Error::parse(header_line, "header must be `label,item1,item2,...`"));
    }
    let mut rows = Vec::new();
    let mut utilities: Option<BTreeMap<ItemId, Rational>> = None;
    let mut seen = HashSet::new();
    for (line_no, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let label = cells[0];
        let values = &cells[1..];
        if values.len() > universe.len() {
            return Err(Error::parse(line_no, "more cells than items"));
        }
        if label == UTILITY_LABEL {
            if utilities.is_some() {
                return Err(Error::parse(line_no, "duplicate @utility row"));
            }
            let mut map = BTreeMap::new();
            for (item, cell) in values.iter().enumerate() {
                if cell.is_empty() {
                    continue;
                }
                let u = parse_rational(cell).map_err(|e| Error::parse(line_no, e.to_string()))?;
                if !is_non_negative(&u) {
                    return Err(Error::parse(line_no, "negative utility"));
                }
                map.insert(item, u);
            }
            utilities = Some(map);
            continue;
        }
        if !seen.insert(label.to_string()) {
            return Err(Error::parse(line_no, format!("duplicate label {label:?}")));
        }
        let mut quantities = BTreeMap::new();
        for (item, cell) in values.iter().enumerate() {
            if cell.is_empty() {
                continue;
            }
            let q = parse_u32(cell, line_no, "quantity")?;
            if q > 0 {
                quantities.insert(item, q);
            }
        }
        rows.push(QuantityRow {
            label: label.to_string(),
            quantities,
        });
    }
    let utilities = utilities.ok_or_else(|| Error::parse(0, "missing @utility row"))?;
    for row in &rows {
        if let Some(&item) = row.quantities.keys().find(|i| !utilities.contains_key(i)) {
            return Err(Error::Consistency(format!(
                "item {} appears in {} but has no utility",
                universe[item], row.label
            )));
        }
    }
    Ok((QuantityDb { universe, rows }, UtilityTable { utilities }))
}

pub fn write_quantity_table(db: &QuantityDb, utilities: &UtilityTable) -> String {
    let mut out = format!("label,{}\n", db.universe.join(","));
    for row in &db.rows {
        out.push_str(&row.label);
        for item in 0..db.universe.len() {
            let _ = write!(out, ",{}", row.quantity(item));
        }
        out.push('\n');
    }
    out.push_str(UTILITY_LABEL);
    for item in 0..db.universe.len() {
        out.push(',');
        if let Some(u) = utilities.get(item) {
            out.push_str(&format_rational(&u));
        }
    }
    out.push('\n');
    out
}

/// Numeric matrix with optionally missing cells (`?` or empty).
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledMatrix {
    pub column_labels: Option<Vec<String>>,
    pub row_labels: Option<Vec<String>>,
    pub values: Array2<f64>,
    /// `true` where a value was present.
    pub known: Array2<bool>,
}

/// Reads a numeric CSV. A non-numeric first row is taken as a header and a
/// non-numeric first column as row labels.
pub fn parse_matrix_csv(text: &str) -> Result<LabeledMatrix> {
    let rows: Vec<(usize, Vec<&str>)> = content_lines(text)
        .map(|(n, l)| (n, l.split(',').map(str::trim).collect()))
        .collect();
    if rows.is_empty() {
        return Err(Error::parse(0, "empty matrix"));
    }
    let is_cell = |c: &str| c.is_empty() || c == "?" || c.parse::<f64>().is_ok();
    let has_header = rows[0].1.iter().skip(1).any(|c| !is_cell(c));
    let body = if has_header { &rows[1..] } else { &rows[..] };
    if body.is_empty() {
        return Err(Error::parse(rows[0].0, "matrix has no data rows"));
    }
    let labelled = body.iter().any(|(_, r)| !is_cell(r[0]));
    let skip = labelled as usize;
    let cols = body[0].1.len() - skip;
    let mut values = Array2::zeros((body.len(), cols));
    let mut known = Array2::from_elem((body.len(), cols), false);
    let mut row_labels = Vec::new();
    for (r, (line_no, cells)) in body.iter().enumerate() {
        if cells.len() - skip != cols {
            return Err(Error::parse(*line_no, format!("expected {cols} values")));
        }
        if labelled {
            row_labels.push(cells[0].to_string());
        }
        for (c, cell) in cells[skip..].iter().enumerate() {
            if cell.is_empty() || *cell == "?" {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::parse(*line_no, format!("bad number {cell:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(*line_no, format!("non-finite value {cell:?}")));
            }
            values[[r, c]] = v;
            known[[r, c]] = true;
        }
    }
    let column_labels = has_header.then(|| rows[0].1[skip..].iter().map(|s| s.to_string()).collect());
    Ok(LabeledMatrix {
        column_labels,
        row_labels: labelled.then_some(row_labels),
        values,
        known,
    })
}

pub fn write_matrix_csv(
    values: &Array2<f64>,
    column_labels: Option<&[String]>,
    row_labels: Option<&[String]>,
) -> String {
    let mut out = String::new();
    if let Some(cols) = column_labels {
        if row_labels.is_some() {
            out.push(',');
        }
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    for (r, row) in values.rows().into_iter().enumerate() {
        let mut cells: Vec<String> = Vec::with_capacity(row.len() + 1);
        if let Some(labels) = row_labels {
            cells.push(labels[r].clone());
        }
        cells.extend(row.iter().map(|v| format!("{v}")));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Table of categorical cells, e.g. which nurse worked each shift of each
/// day. The first column holds row labels; empty or `?` cells are missing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryTable {
    pub columns: Vec<String>,
    pub row_labels: Vec<String>,
    pub cells: Vec<Vec<Option<String>>>,
}

impl CategoryTable {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Consistency(format!("no column named {name:?}")))
    }
}

pub fn parse_category_csv(text: &str) -> Result<CategoryTable> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines.next().ok_or_else(|| Error::parse(0, "empty table"))?;
    let columns: Vec<String> = header.split(',').skip(1).map(|c| c.trim().to_string()).collect();
    if columns.is_empty() || columns.iter().any(String::is_empty) {
        return Err(Error::parse(header_line, "header must be `label,column1,column2,...`"));
    }
    if columns.iter().collect::<HashSet<_>>().len() != columns.len() {
        return Err(Error::parse(header_line, "duplicate column name"));
    }
    let mut row_labels = Vec::new();
    let mut cells = Vec::new();
    for (line_no, line) in lines {
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != columns.len() + 1 {
            return Err(Error::parse(
                line_no,
                format!("expected {} cells, found {}", columns.len() + 1, parts.len()),
            ));
        }
        row_labels.push(parts[0].to_string());
        cells.push(
            parts[1..]
                .iter()
                .map(|c| (!c.is_empty() && *c != "?").then(|| c.to_string()))
                .collect(),
        );
    }
    Ok(CategoryTable {
        columns,
        row_labels,
        cells,
    })
}

pub fn write_category_csv(table: &CategoryTable) -> String {
    let mut out = format!("label,{}\n", table.columns.join(","));
    for (label, row) in table.row_labels.iter().zip(&table.cells) {
        out.push_str(label);
        for c in row {
            out.push(',');
            out.push_str(c.as_deref().unwrap_or("?"));
        }
        out.push('\n');
    }
    out
}

/// Sorts names so that `Nurse_2` precedes `Nurse_10`.
pub fn natural_sort(names: &mut [String]) {
    names.sort_by_cached_key(|n| natural_key(n));
}
