//! Text formats for instances and results.
//!
//! Point sets: line 1 `dim <d> colors <k> <n>`, then one point per line
//! `<color> <x_1> ... <x_d>`. Grids: line 1 `dim <d> <nx> [<ny>] <x0>
//! [<y0>] <hx> [<hy>]`, then row-major values. Rationals are written `p/q`
//! (plain integer when the denominator is one) and parsed exactly,
//! including decimal literals. Floats are written as shortest decimals that
//! round-trip bit-exactly; non-finite values are rejected. Parsers report
//! the offending line.

use std::fmt;

use crate::balanced::BalancedWitness;
use crate::colored::ColoredPointSet;
use crate::dichotomy::SideAssignment;
use crate::geom::{AffineFunctional, Halfspace, Point, Sense, Sign};
use crate::grid::DensityGrid;
use crate::scalar::{self, Rational};
use crate::window::{GVPartition, QuadraticFunctional};

#[derive(Debug, Clone)]
pub struct ParseError {
    pub line: usize,
    pub what: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.what)
    }
}

impl std::error::Error for ParseError {}

fn fail<T>(line: usize, what: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        what: what.into(),
    })
}

/// Whitespace token stream that remembers which line each token came from.
struct Cursor<'a> {
    toks: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        let mut toks = Vec::new();
        let mut last_line = 1;
        for (i, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("");
            for tok in body.split_whitespace() {
                toks.push((i + 1, tok));
                last_line = i + 1;
            }
        }
        Cursor {
            toks,
            pos: 0,
            last_line,
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str), ParseError> {
        if self.pos >= self.toks.len() {
            return fail(self.last_line, format!("expected {what}, found end of input"));
        }
        let t = self.toks[self.pos];
        self.pos += 1;
        Ok(t)
    }

    fn keyword(&mut self, kw: &str) -> Result<usize, ParseError> {
        let (line, tok) = self.next(&format!("keyword {kw:?}"))?;
        if tok != kw {
            return fail(line, format!("expected {kw:?}, found {tok:?}"));
        }
        Ok(line)
    }

    fn count(&mut self, what: &str) -> Result<usize, ParseError> {
        let (line, tok) = self.next(what)?;
        tok.parse::<usize>()
            .or_else(|_| fail(line, format!("expected {what}, found {tok:?}")))
    }

    fn rational(&mut self, what: &str) -> Result<Rational, ParseError> {
        let (line, tok) = self.next(what)?;
        scalar::parse_rational(tok).or_else(|_| fail(line, format!("{what}: not a number: {tok:?}")))
    }

    fn float(&mut self, what: &str) -> Result<f64, ParseError> {
        let (line, tok) = self.next(what)?;
        let v: f64 = tok
            .parse()
            .or_else(|_| fail(line, format!("{what}: not a number: {tok:?}")))?;
        if !v.is_finite() {
            return fail(line, format!("{what}: non-finite value {tok:?}"));
        }
        Ok(v)
    }

    fn done(&mut self) -> Result<(), ParseError> {
        if self.pos < self.toks.len() {
            let (line, tok) = self.toks[self.pos];
            return fail(line, format!("unexpected trailing token {tok:?}"));
        }
        Ok(())
    }
}

/// Shortest decimal that parses back to the same f64; negative zero is
/// written as plain zero.
pub fn fmt_f64(v: f64) -> String {
    debug_assert!(v.is_finite());
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v}")
}

pub fn parse_point_set(text: &str) -> Result<ColoredPointSet, ParseError> {
    let mut c = Cursor::new(text);
    c.keyword("dim")?;
    let d = c.count("dimension")?;
    c.keyword("colors")?;
    let k = c.count("color count")?;
    let n = c.count("points per color")?;
    if d == 0 || k == 0 || n == 0 {
        return fail(1, "dimension, colors and points per color must be positive");
    }
    let total = k
        .checked_mul(n)
        .filter(|t| *t <= 4096)
        .ok_or(ParseError {
            line: 1,
            what: "point count out of range".into(),
        })?;
    let mut points = Vec::with_capacity(total);
    let mut colors = Vec::with_capacity(total);
    for _ in 0..total {
        let (line, tok) = c.next("point color")?;
        let color: usize = tok
            .parse()
            .or_else(|_| fail(line, format!("expected a color index, found {tok:?}")))?;
        if color >= k {
            return fail(line, format!("color {color} out of range 0..{k}"));
        }
        let mut coords = Vec::with_capacity(d);
        for axis in 0..d {
            coords.push(c.rational(&format!("coordinate {axis}"))?);
        }
        colors.push(color);
        points.push(Point::new(coords));
    }
    c.done()?;
    ColoredPointSet::new(points, colors, k).or_else(|e| fail(1, e.to_string()))
}

pub fn write_point_set(s: &ColoredPointSet) -> String {
    let mut out = format!("dim {} colors {} {}\n", s.dim(), s.num_colors(), s.per_color());
    for (p, color) in s.points().iter().zip(s.colors()) {
        out.push_str(&color.to_string());
        for x in &p.coords {
            out.push(' ');
            out.push_str(&scalar::format_rational(x));
        }
        out.push('\n');
    }
    out
}

fn grid_header(c: &mut Cursor) -> Result<(usize, usize, usize), ParseError> {
    c.keyword("dim")?;
    let d = c.count("grid dimension")?;
    if d != 1 && d != 2 {
        return fail(1, format!("grid dimension must be 1 or 2, got {d}"));
    }
    let nx = c.count("cell count nx")?;
    let ny = if d == 2 { c.count("cell count ny")? } else { 1 };
    if nx == 0 || ny == 0 || nx.saturating_mul(ny) > 4_000_000 {
        return fail(1, "cell counts out of range");
    }
    Ok((d, nx, ny))
}

pub fn parse_grid(text: &str) -> Result<DensityGrid<Rational>, ParseError> {
    let mut c = Cursor::new(text);
    let (d, nx, ny) = grid_header(&mut c)?;
    let x0 = c.rational("origin x0")?;
    let y0 = if d == 2 {
        c.rational("origin y0")?
    } else {
        Rational::from_integer(0.into())
    };
    let hx = c.rational("cell size hx")?;
    let hy = if d == 2 {
        c.rational("cell size hy")?
    } else {
        Rational::from_integer(1.into())
    };
    let mut values = Vec::with_capacity(nx * ny);
    for i in 0..nx * ny {
        values.push(c.rational(&format!("value {i}"))?);
    }
    c.done()?;
    let grid = if d == 1 {
        DensityGrid::new_1d(x0, hx, values)
    } else {
        DensityGrid::new_2d(nx, ny, x0, y0, hx, hy, values)
    };
    grid.or_else(|e| fail(1, e.to_string()))
}

pub fn parse_grid_f64(text: &str) -> Result<DensityGrid<f64>, ParseError> {
    let mut c = Cursor::new(text);
    let (d, nx, ny) = grid_header(&mut c)?;
    let x0 = c.float("origin x0")?;
    let y0 = if d == 2 { c.float("origin y0")? } else { 0.0 };
    let hx = c.float("cell size hx")?;
    let hy = if d == 2 { c.float("cell size hy")? } else { 1.0 };
    let mut values = Vec::with_capacity(nx * ny);
    for i in 0..nx * ny {
        values.push(c.float(&format!("value {i}"))?);
    }
    c.done()?;
    let grid = if d == 1 {
        DensityGrid::new_1d(x0, hx, values)
    } else {
        DensityGrid::new_2d(nx, ny, x0, y0, hx, hy, values)
    };
    grid.or_else(|e| fail(1, e.to_string()))
}

pub fn write_grid(g: &DensityGrid<Rational>) -> String {
    let mut out = grid_header_line(g, |v| scalar::format_rational(v));
    push_rows(&mut out, g.nx(), g.ny(), g.values(), |v| {
        scalar::format_rational(v)
    });
    out
}

pub fn write_grid_f64(g: &DensityGrid<f64>) -> String {
    let mut out = grid_header_line(g, |v| fmt_f64(*v));
    push_rows(&mut out, g.nx(), g.ny(), g.values(), |v| fmt_f64(*v));
    out
}

fn grid_header_line<T: crate::geom::Coord>(
    g: &DensityGrid<T>,
    show: impl Fn(&T) -> String,
) -> String {
    if g.dim() == 1 {
        format!("dim 1 {} {} {}\n", g.nx(), show(g.x0()), show(g.hx()))
    } else {
        format!(
            "dim 2 {} {} {} {} {} {}\n",
            g.nx(),
            g.ny(),
            show(g.x0()),
            show(g.y0()),
            show(g.hx()),
            show(g.hy())
        )
    }
}

fn push_rows<T>(out: &mut String, nx: usize, ny: usize, values: &[T], show: impl Fn(&T) -> String) {
    for row in 0..ny {
        for col in 0..nx {
            out.push_str(&show(&values[row * nx + col]));
            out.push(if col + 1 == nx { '\n' } else { ' ' });
        }
    }
}

/// One line: `functional: a_1 ... a_d c | assignment: idx:side ... |
/// counts: plus/minus ...` (counts per color). Witnesses produced by this
/// crate orient their halfspaces non-negatively.
pub fn write_balanced_witness(w: &BalancedWitness) -> String {
    debug_assert_eq!(w.halfspace.sense, Sense::NonNegative);
    let mut out = String::from("functional:");
    for a in &w.halfspace.functional.coeffs {
        out.push(' ');
        out.push_str(&scalar::format_rational(a));
    }
    out.push(' ');
    out.push_str(&scalar::format_rational(&w.halfspace.functional.offset));
    out.push_str(" | assignment:");
    for (idx, side) in &w.assignment.assigned {
        out.push_str(&format!(" {idx}:{}", side.as_str()));
    }
    out.push_str(" | counts:");
    for (p, m) in w.plus_counts.iter().zip(&w.minus_counts) {
        out.push_str(&format!(" {p}/{m}"));
    }
    out.push('\n');
    out
}

pub fn parse_balanced_witness(text: &str) -> Result<BalancedWitness, ParseError> {
    let mut c = Cursor::new(text);
    c.keyword("functional:")?;
    let mut numbers = Vec::new();
    loop {
        let (line, tok) = c.next("functional coefficient or |")?;
        if tok == "|" {
            break;
        }
        let v = scalar::parse_rational(tok)
            .or_else(|_| fail(line, format!("not a number: {tok:?}")))?;
        numbers.push(v);
        let _ = line;
    }
    if numbers.len() < 2 {
        return fail(1, "functional needs at least one coefficient and an offset");
    }
    let offset = numbers.pop().expect("checked length");
    let functional = AffineFunctional::new(numbers, offset);

    c.keyword("assignment:")?;
    let mut assigned = Vec::new();
    loop {
        let (line, tok) = c.next("assignment entry or |")?;
        if tok == "|" {
            break;
        }
        let Some((idx, side)) = tok.split_once(':') else {
            return fail(line, format!("expected idx:side, found {tok:?}"));
        };
        let idx: usize = idx
            .parse()
            .or_else(|_| fail(line, format!("bad point index in {tok:?}")))?;
        let side = match side {
            "+" => Sign::Pos,
            "-" => Sign::Neg,
            _ => return fail(line, format!("side must be + or -, found {side:?}")),
        };
        assigned.push((idx, side));
    }

    c.keyword("counts:")?;
    let mut plus_counts = Vec::new();
    let mut minus_counts = Vec::new();
    while c.pos < c.toks.len() {
        let (line, tok) = c.next("count entry")?;
        let Some((p, m)) = tok.split_once('/') else {
            return fail(line, format!("expected plus/minus counts, found {tok:?}"));
        };
        let p: usize = p
            .parse()
            .or_else(|_| fail(line, format!("bad count in {tok:?}")))?;
        let m: usize = m
            .parse()
            .or_else(|_| fail(line, format!("bad count in {tok:?}")))?;
        plus_counts.push(p);
        minus_counts.push(m);
    }
    if plus_counts.is_empty() {
        return fail(1, "counts section is empty");
    }
    let common_count = plus_counts[0];
    Ok(BalancedWitness {
        halfspace: Halfspace::new(functional, Sense::NonNegative),
        assignment: SideAssignment { assigned },
        plus_counts,
        minus_counts,
        common_count,
    })
}

/// One line: `u: u_1 ... u_{d+1} | fractions: f_0 ... f_d | t: v |
/// residual: v`.
pub fn write_cut_line(u: &[f64], fractions: &[f64], t: f64, residual: f64) -> String {
    let mut out = String::from("u:");
    for v in u {
        out.push(' ');
        out.push_str(&fmt_f64(*v));
    }
    out.push_str(" | fractions:");
    for v in fractions {
        out.push(' ');
        out.push_str(&fmt_f64(*v));
    }
    out.push_str(&format!(
        " | t: {} | residual: {}\n",
        fmt_f64(t),
        fmt_f64(residual)
    ));
    out
}

/// Partition file: `m <m>`, one `a0 a1 a2 b` line per functional, then
/// `measures <rows>` and one fraction row per measure.
pub fn write_partition(p: &GVPartition, cell_measures: &[Vec<f64>]) -> String {
    let mut out = format!("m {}\n", p.m());
    for q in &p.functionals {
        out.push_str(&format!(
            "{} {} {} {}\n",
            fmt_f64(q.a0),
            fmt_f64(q.a1),
            fmt_f64(q.a2),
            fmt_f64(q.b)
        ));
    }
    out.push_str(&format!("measures {}\n", cell_measures.len()));
    for row in cell_measures {
        debug_assert_eq!(row.len(), p.m());
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_partition(text: &str) -> Result<(GVPartition, Vec<Vec<f64>>), ParseError> {
    let mut c = Cursor::new(text);
    c.keyword("m")?;
    let m = c.count("cell count")?;
    if m == 0 || m > 64 {
        return fail(1, "cell count out of range");
    }
    let mut functionals = Vec::with_capacity(m);
    for i in 0..m {
        let what = format!("functional {i}");
        functionals.push(QuadraticFunctional {
            a0: c.float(&what)?,
            a1: c.float(&what)?,
            a2: c.float(&what)?,
            b: c.float(&what)?,
        });
    }
    c.keyword("measures")?;
    let rows = c.count("measure count")?;
    let mut cell_measures = Vec::with_capacity(rows);
    for j in 0..rows {
        let what = format!("measure row {j}");
        let mut row = Vec::with_capacity(m);
        for _ in 0..m {
            row.push(c.float(&what)?);
        }
        cell_measures.push(row);
    }
    c.done()?;
    Ok((GVPartition { functionals }, cell_measures))
}

/// One line: `<a> <b>`, both exact rationals.
pub fn write_interval(a: &Rational, b: &Rational) -> String {
    format!(
        "{} {}\n",
        scalar::format_rational(a),
        scalar::format_rational(b)
    )
}

pub fn parse_interval(text: &str) -> Result<(Rational, Rational), ParseError> {
    let mut c = Cursor::new(text);
    let a = c.rational("interval start")?;
    let b = c.rational("interval end")?;
    c.done()?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balanced::{find_balanced_hyperplane, BalancedOutcome};
    use crate::scalar::{from_int, ratio};

    #[test]
    fn point_set_round_trips() {
        let text = "dim 2 colors 2 2\n0 -1 1/3\n0 2.5 0\n1 1 7\n1 -2 -3/4\n";
        let s = parse_point_set(text).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.per_color(), 2);
        assert_eq!(s.point(1).coords[0], ratio(5, 2));
        let written = write_point_set(&s);
        let again = parse_point_set(&written).unwrap();
        assert_eq!(s.points(), again.points());
        assert_eq!(s.colors(), again.colors());
        // Canonical output is stable.
        assert_eq!(written, write_point_set(&again));
    }

    #[test]
    fn point_set_errors_carry_line_numbers() {
        let text = "dim 2 colors 2 2\n0 -1 1/3\n0 x 0\n1 1 7\n1 -2 -3/4\n";
        let e = parse_point_set(text).unwrap_err();
        assert_eq!(e.line, 3);
        let e = parse_point_set("dim 2 colors 2 2\n0 1 2\n").unwrap_err();
        assert_eq!(e.line, 2, "truncated input points at the last line");
        let e = parse_point_set("dim 2 colors 2 2\n0 0 0\n0 1 0\n1 2 0\n1 3 0\n").unwrap_err();
        assert_eq!(e.line, 1, "collinear set rejected at construction");
    }

    #[test]
    fn rational_grid_round_trips() {
        let g = DensityGrid::new_2d(
            2,
            2,
            ratio(-1, 2),
            from_int(0),
            ratio(1, 3),
            ratio(2, 3),
            vec![from_int(1), ratio(1, 7), from_int(0), ratio(22, 7)],
        )
        .unwrap();
        let text = write_grid(&g);
        let again = parse_grid(&text).unwrap();
        assert_eq!(g.values(), again.values());
        assert_eq!(g.x0(), again.x0());
        assert_eq!(g.hy(), again.hy());
        assert_eq!(text, write_grid(&again));
    }

    #[test]
    fn float_grid_round_trips_bit_exactly() {
        let values = vec![0.1, -0.0, 1.0 / 3.0, 6.02e23];
        let g = DensityGrid::new_2d(2, 2, 0.125, -3.5, 0.2, 0.7, values).unwrap();
        let text = write_grid_f64(&g);
        let again = parse_grid_f64(&text).unwrap();
        for (a, b) in g.values().iter().zip(again.values()) {
            if *a == 0.0 {
                assert_eq!(b.to_bits(), 0, "zeros canonicalize to +0");
            } else {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        assert_eq!(text, write_grid_f64(&again));
        assert!(!text.contains("-0 "), "negative zero is canonicalized");
    }

    #[test]
    fn float_grid_rejects_non_finite() {
        assert!(parse_grid_f64("dim 1 2 0 1\ninf 1\n").is_err());
        assert!(parse_grid_f64("dim 1 2 0 1\nNaN 1\n").is_err());
    }

    #[test]
    fn balanced_witness_round_trips() {
        let text = "dim 1 colors 2 2\n0 -1\n0 2\n1 0\n1 1\n";
        let s = parse_point_set(text).unwrap();
        let BalancedOutcome::Found(w) = find_balanced_hyperplane(&s) else {
            panic!("expected a witness on the 1D example");
        };
        let line = write_balanced_witness(&w);
        let again = parse_balanced_witness(&line).unwrap();
        assert_eq!(w.halfspace, again.halfspace);
        assert_eq!(w.assignment, again.assignment);
        assert_eq!(w.plus_counts, again.plus_counts);
        assert_eq!(w.minus_counts, again.minus_counts);
        assert_eq!(w.common_count, again.common_count);
    }

    #[test]
    fn partition_round_trips() {
        let p = GVPartition {
            functionals: vec![
                QuadraticFunctional {
                    a0: -0.3,
                    a1: 1.0 / 3.0,
                    a2: 2.25,
                    b: 1e-9,
                },
                QuadraticFunctional::zero(),
            ],
        };
        let rows = vec![vec![0.5, 0.5], vec![0.25, 0.75], vec![0.4999999999, 0.5000000001]];
        let text = write_partition(&p, &rows);
        let (p2, rows2) = parse_partition(&text).unwrap();
        assert_eq!(p.functionals, p2.functionals);
        assert_eq!(rows, rows2);
        assert_eq!(text, write_partition(&p2, &rows2));
    }

    #[test]
    fn interval_and_cut_lines_are_stable() {
        let text = write_interval(&ratio(1, 2), &ratio(5, 2));
        assert_eq!(text, "1/2 5/2\n");
        let (a, b) = parse_interval(&text).unwrap();
        assert_eq!(a, ratio(1, 2));
        assert_eq!(b, ratio(5, 2));

        let line = write_cut_line(&[0.6, -0.8, 0.0], &[0.25, 0.25], 0.25, 1e-9);
        assert_eq!(
            line,
            "u: 0.6 -0.8 0 | fractions: 0.25 0.25 | t: 0.25 | residual: 0.000000001\n"
        );
    }
}
