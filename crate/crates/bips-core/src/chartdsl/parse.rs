//! Line-oriented parser for chart sources.
//!
//! A source is one `chart` header followed by `panel ... end` blocks holding
//! `series` and `annotate` lines. `#` starts a comment outside quoted
//! strings, blank lines are ignored, and fields on a line appear in the fixed
//! order that [`super::ast::serialize_chart`] emits.

use super::ast::{legend_for, Annotation, ChartSpec, Panel, Series, SeriesKind};
use super::coord::Coord;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, col {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { id: String, line: usize },
    #[error("line {line}: panel `{id}` {msg}")]
    GridOverflow { id: String, line: usize, msg: String },
}

/// Removes a trailing comment, honoring quotes and backslash escapes so that
/// `#` inside a string stays part of the string.
fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    let mut escaped = false;
    for (idx, ch) in line.char_indices() {
        if in_string {
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_string = false;
            }
        } else if ch == '"' {
            in_string = true;
        } else if ch == '#' {
            return &line[..idx];
        }
    }
    line
}

/// Cursor over one line with 1-based column tracking for error messages.
struct Cursor<'a> {
    text: &'a str,
    line: usize,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, line: usize) -> Cursor<'a> {
        Cursor { text, line, pos: 0 }
    }

    fn col(&self) -> usize {
        self.text[..self.pos].chars().count() + 1
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: self.line, col: self.col(), msg: msg.into() }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start_matches([' ', '\t']);
        self.pos = self.text.len() - trimmed.len();
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.rest().is_empty()
    }

    fn expect_end(&mut self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing input"))
        }
    }

    /// Consumes `key=` after whitespace.
    fn expect_key(&mut self, key: &str) -> Result<(), ParseError> {
        self.skip_ws();
        let want = format!("{key}=");
        if let Some(rest) = self.rest().strip_prefix(&want) {
            self.pos = self.text.len() - rest.len();
            Ok(())
        } else {
            Err(self.error(format!("expected `{key}=`")))
        }
    }

    fn has_key(&mut self, key: &str) -> bool {
        self.skip_ws();
        self.rest().starts_with(&format!("{key}="))
    }

    /// A bare token: everything up to the next whitespace.
    fn token(&mut self) -> Result<&'a str, ParseError> {
        self.skip_ws();
        let rest = self.rest();
        let end = rest.find([' ', '\t']).unwrap_or(rest.len());
        if end == 0 {
            return Err(self.error("expected a value"));
        }
        self.pos += end;
        Ok(&rest[..end])
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        let start_col = {
            self.skip_ws();
            self.col()
        };
        let tok = self.token()?;
        let ok = !tok.is_empty()
            && tok.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && tok.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if ok {
            Ok(tok.to_string())
        } else {
            Err(ParseError::Syntax {
                line: self.line,
                col: start_col,
                msg: format!("invalid identifier `{tok}`"),
            })
        }
    }

    fn number_from(&self, tok: &str) -> Result<Coord, ParseError> {
        Coord::parse(tok).map_err(|msg| self.error(msg))
    }

    /// `"text"` with `\"` and `\\` escapes; control characters are rejected.
    fn quoted(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        if !self.rest().starts_with('"') {
            return Err(self.error("expected an opening quote"));
        }
        self.pos += 1;
        let mut out = String::new();
        let mut chars = self.rest().char_indices();
        while let Some((idx, ch)) = chars.next() {
            match ch {
                '"' => {
                    self.pos += idx + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, '"')) => out.push('"'),
                    Some((_, '\\')) => out.push('\\'),
                    _ => return Err(self.error("invalid escape sequence")),
                },
                c if c.is_control() => return Err(self.error("control character in string")),
                c => out.push(c),
            }
        }
        Err(self.error("unterminated string"))
    }

    /// `<lo>..<hi>` range of coordinates.
    fn range(&mut self) -> Result<(Coord, Coord), ParseError> {
        let tok = self.token()?;
        let (lo, hi) = tok.split_once("..").ok_or_else(|| self.error("expected `lo..hi`"))?;
        Ok((self.number_from(lo)?, self.number_from(hi)?))
    }

    /// `<x>,<y>` pair of coordinates.
    fn coord_pair(&mut self) -> Result<(Coord, Coord), ParseError> {
        let tok = self.token()?;
        let (x, y) = tok.split_once(',').ok_or_else(|| self.error("expected `x,y`"))?;
        Ok((self.number_from(x)?, self.number_from(y)?))
    }

    /// `<row>,<col>` pair of small non-negative integers.
    fn cell(&mut self) -> Result<(u32, u32), ParseError> {
        let tok = self.token()?;
        let (r, c) = tok.split_once(',').ok_or_else(|| self.error("expected `row,col`"))?;
        let parse = |s: &str| s.parse::<u32>().map_err(|_| self.error(format!("invalid grid position `{tok}`")));
        Ok((parse(r)?, parse(c)?))
    }

    /// `<rows>x<cols>` with both dimensions at least 1.
    fn grid(&mut self) -> Result<(u32, u32), ParseError> {
        let tok = self.token()?;
        let (r, c) = tok.split_once('x').ok_or_else(|| self.error("expected `<rows>x<cols>`"))?;
        let parse = |s: &str| s.parse::<u32>().map_err(|_| self.error(format!("invalid grid `{tok}`")));
        let (rows, cols) = (parse(r)?, parse(c)?);
        if rows == 0 || cols == 0 {
            return Err(self.error("grid dimensions must be at least 1"));
        }
        Ok((rows, cols))
    }

    fn kind(&mut self) -> Result<SeriesKind, ParseError> {
        match self.token()? {
            "line" => Ok(SeriesKind::Line),
            "bar" => Ok(SeriesKind::Bar),
            "scatter" => Ok(SeriesKind::Scatter),
            other => Err(self.error(format!("unknown series kind `{other}`"))),
        }
    }

    fn boolean(&mut self) -> Result<bool, ParseError> {
        match self.token()? {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(self.error(format!("expected `true` or `false`, found `{other}`"))),
        }
    }

    /// `(x,y)(x,y)...` possibly empty (a placeholder without geometry).
    fn points(&mut self) -> Result<Vec<(Coord, Coord)>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            let rest = self.rest();
            if rest.is_empty() {
                return Ok(out);
            }
            if !rest.starts_with('(') {
                return Err(self.error("expected `(x,y)`"));
            }
            let close = rest.find(')').ok_or_else(|| self.error("unterminated point"))?;
            let body = &rest[1..close];
            let (x, y) = body.split_once(',').ok_or_else(|| self.error("expected `x,y` inside point"))?;
            out.push((self.number_from(x)?, self.number_from(y)?));
            self.pos += close + 1;
        }
    }
}

struct ParserState {
    spec: ChartSpec,
    open_panel: Option<Panel>,
    panel_ids: std::collections::HashSet<String>,
    series_ids: std::collections::HashSet<String>,
    annotation_ids: std::collections::HashSet<String>,
}

/// Parses and fully validates a chart source.
pub fn parse_chart(src: &str) -> Result<ChartSpec, ParseError> {
    let mut state: Option<ParserState> = None;
    let mut line_count = 0;
    for (idx, raw_line) in src.lines().enumerate() {
        let line_no = idx + 1;
        line_count = line_no;
        let line = strip_comment(raw_line);
        if line.trim().is_empty() {
            continue;
        }
        let mut cur = Cursor::new(line, line_no);
        let keyword = cur.token()?;
        match (keyword, &mut state) {
            ("chart", None) => {
                cur.expect_key("grid")?;
                let (grid_rows, grid_cols) = cur.grid()?;
                let title = if cur.has_key("title") {
                    cur.expect_key("title")?;
                    Some(cur.quoted()?)
                } else {
                    None
                };
                cur.expect_end()?;
                state = Some(ParserState {
                    spec: ChartSpec { grid_rows, grid_cols, title, panels: Vec::new() },
                    open_panel: None,
                    panel_ids: Default::default(),
                    series_ids: Default::default(),
                    annotation_ids: Default::default(),
                });
            }
            ("chart", Some(_)) => return Err(cur.error("duplicate chart header")),
            (_, None) => return Err(cur.error("source must start with a chart header")),
            ("panel", Some(st)) => {
                if st.open_panel.is_some() {
                    return Err(cur.error("previous panel is still open (missing `end`)"));
                }
                cur.expect_key("id")?;
                let id = cur.ident()?;
                if !st.panel_ids.insert(id.clone()) {
                    return Err(ParseError::DuplicateId { id, line: line_no });
                }
                cur.expect_key("at")?;
                let (row, col) = cur.cell()?;
                cur.expect_key("xrange")?;
                let x_range = cur.range()?;
                cur.expect_key("yrange")?;
                let y_range = cur.range()?;
                cur.expect_end()?;
                if row >= st.spec.grid_rows || col >= st.spec.grid_cols {
                    return Err(ParseError::GridOverflow {
                        id,
                        line: line_no,
                        msg: format!(
                            "at {},{} is outside the {}x{} grid",
                            row, col, st.spec.grid_rows, st.spec.grid_cols
                        ),
                    });
                }
                if st.spec.panels.iter().any(|p| (p.row, p.col) == (row, col)) {
                    return Err(ParseError::GridOverflow {
                        id,
                        line: line_no,
                        msg: format!("overlaps the occupied cell {row},{col}"),
                    });
                }
                if x_range.0 >= x_range.1 {
                    return Err(cur.error("x range must satisfy lo < hi"));
                }
                if y_range.0 >= y_range.1 {
                    return Err(cur.error("y range must satisfy lo < hi"));
                }
                st.open_panel = Some(Panel {
                    id,
                    row,
                    col,
                    x_range,
                    y_range,
                    series: Vec::new(),
                    legend: Vec::new(),
                    annotations: Vec::new(),
                });
            }
            ("series", Some(st)) => {
                let panel = st.open_panel.as_mut().ok_or_else(|| cur.error("series outside a panel"))?;
                cur.expect_key("id")?;
                let id = cur.ident()?;
                if !st.series_ids.insert(id.clone()) {
                    return Err(ParseError::DuplicateId { id, line: line_no });
                }
                cur.expect_key("kind")?;
                let kind = cur.kind()?;
                cur.expect_key("visible")?;
                let visible = cur.boolean()?;
                cur.expect_key("points")?;
                let points = cur.points()?;
                if kind == SeriesKind::Line && points.windows(2).any(|p| p[0].0 > p[1].0) {
                    return Err(cur.error(format!("line series `{id}` points must be sorted by x")));
                }
                panel.series.push(Series { id, kind, visible, points });
            }
            ("annotate", Some(st)) => {
                let panel = st.open_panel.as_mut().ok_or_else(|| cur.error("annotate outside a panel"))?;
                cur.expect_key("id")?;
                let id = cur.ident()?;
                if !st.annotation_ids.insert(id.clone()) {
                    return Err(ParseError::DuplicateId { id, line: line_no });
                }
                cur.expect_key("text")?;
                let text = cur.quoted()?;
                cur.expect_key("at")?;
                let at = cur.coord_pair()?;
                cur.expect_end()?;
                panel.annotations.push(Annotation { id, text, at });
            }
            ("end", Some(st)) => {
                cur.expect_end()?;
                let mut panel = st.open_panel.take().ok_or_else(|| cur.error("`end` without an open panel"))?;
                panel.legend = legend_for(&panel.series);
                st.spec.panels.push(panel);
            }
            (other, Some(_)) => return Err(cur.error(format!("unknown directive `{other}`"))),
        }
    }
    let eof = |msg: &str| ParseError::Syntax { line: line_count + 1, col: 1, msg: msg.to_string() };
    let state = state.ok_or_else(|| eof("empty chart source"))?;
    if state.open_panel.is_some() {
        return Err(eof("unexpected end of input: panel not closed"));
    }
    if state.spec.panels.is_empty() {
        return Err(eof("chart has no panels"));
    }
    debug_assert_eq!(state.spec.validate(), Ok(()));
    Ok(state.spec)
}
