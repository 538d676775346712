//! Question generation over sampled charts.
//!
//! Candidates are enumerated from chart structure, built into four-option
//! questions with near-miss distractors, then kept only if they pass the
//! full validation gauntlet: structural checks, an oracle round trip, and
//! the counterfactual view contract. Ties and degenerate cases fall out as
//! rejected attempts, which the dataset funnel counts.

use crate::chartdsl::{ChartSpec, Coord, SeriesKind};
use crate::rng::rng_from;
use crate::viewgen::oracle::{
    crossings_on_shared_grid, lookup_at, oracle_answer, panel_max_value, series_max_value,
    trend_of, Crossings, Lookup, Verdict,
};
use crate::viewgen::question::{
    render_text, Question, QuestionParams, TemplateId, N_TEMPLATES, OPT_CANNOT, OPT_EQUAL,
    OPT_NONE_OF, OPT_TIE, TREND_WORDS,
};
use crate::viewgen::views::{check_view_contract, make_views};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy)]
enum Candidate {
    ValueLookup { panel: usize, series: usize },
    CompareAtX { panel: usize, a: usize, b: usize },
    SeriesMax { panel: usize },
    CountCrossings { panel: usize, a: usize, b: usize },
    TrendSign { panel: usize, series: usize },
    PanelCompare { p1: usize, p2: usize },
}

impl Candidate {
    fn template(&self) -> TemplateId {
        match self {
            Candidate::ValueLookup { .. } => TemplateId::ValueLookup,
            Candidate::CompareAtX { .. } => TemplateId::CompareAtX,
            Candidate::SeriesMax { .. } => TemplateId::SeriesMax,
            Candidate::CountCrossings { .. } => TemplateId::CountCrossings,
            Candidate::TrendSign { .. } => TemplateId::TrendSign,
            Candidate::PanelCompare { .. } => TemplateId::PanelCompare,
        }
    }
}

pub struct GenerationOutcome {
    pub questions: Vec<Question>,
    /// Candidates actually tried, including ones rejected by construction
    /// or validation. Always at least `questions.len()`.
    pub attempted: usize,
}

fn enumerate_candidates(spec: &ChartSpec) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (pi, panel) in spec.panels.iter().enumerate() {
        let data: Vec<usize> = panel
            .series
            .iter()
            .enumerate()
            .filter(|(_, s)| s.visible && !s.points.is_empty())
            .map(|(i, _)| i)
            .collect();
        for &si in &data {
            out.push(Candidate::ValueLookup { panel: pi, series: si });
            out.push(Candidate::TrendSign { panel: pi, series: si });
        }
        if data.len() >= 2 {
            out.push(Candidate::SeriesMax { panel: pi });
        }
        for (i, &a) in data.iter().enumerate() {
            for &b in &data[i + 1..] {
                out.push(Candidate::CompareAtX { panel: pi, a, b });
                if panel.series[a].kind == SeriesKind::Line
                    && panel.series[b].kind == SeriesKind::Line
                {
                    out.push(Candidate::CountCrossings { panel: pi, a, b });
                }
            }
        }
    }
    for p1 in 0..spec.panels.len() {
        for p2 in (p1 + 1)..spec.panels.len() {
            out.push(Candidate::PanelCompare { p1, p2 });
        }
    }
    out
}

/// Shuffles the correct option among three distractors and assembles the
/// question. Returns `None` when the option set is not four distinct strings.
fn finalize(
    rng: &mut ChaCha8Rng,
    template: TemplateId,
    params: QuestionParams,
    correct: String,
    distractors: Vec<String>,
) -> Option<Question> {
    if distractors.len() != 3 {
        return None;
    }
    let mut opts = vec![correct.clone()];
    opts.extend(distractors);
    for i in 0..4 {
        for j in (i + 1)..4 {
            if opts[i] == opts[j] {
                return None;
            }
        }
    }
    opts.shuffle(rng);
    let answer_index = opts.iter().position(|o| *o == correct).unwrap() as u8;
    let options: [String; 4] = opts.try_into().unwrap();
    Some(Question {
        text: render_text(template, &params),
        template,
        params,
        options,
        answer_index,
    })
}

fn build_value_lookup(
    spec: &ChartSpec,
    rng: &mut ChaCha8Rng,
    pi: usize,
    si: usize,
) -> Option<Question> {
    let panel = &spec.panels[pi];
    let series = &panel.series[si];
    let &(x, y) = &series.points[rng.random_range(0..series.points.len())];
    if lookup_at(series, x) != Lookup::Value(y) {
        return None;
    }
    // Near-miss pool: the same series elsewhere, sibling series at the same
    // x, and fixed offsets from the answer.
    let mut pool: BTreeSet<Coord> = BTreeSet::new();
    for &(_, other_y) in &series.points {
        pool.insert(other_y);
    }
    for sibling in panel.data_series() {
        if let Lookup::Value(v) = lookup_at(sibling, x) {
            pool.insert(v);
        }
    }
    let one = Coord::from_int(1);
    let half = Coord::new(5, 1);
    let two = Coord::from_int(2);
    for delta in [one, half, two] {
        pool.insert(y + delta);
        pool.insert(y - delta);
    }
    pool.remove(&y);
    let mut pool: Vec<Coord> = pool.into_iter().collect();
    pool.shuffle(rng);
    if pool.len() < 3 {
        return None;
    }
    let distractors = pool[..3].iter().map(Coord::to_string).collect();
    let params = QuestionParams {
        panel: panel.id.clone(),
        series: vec![series.id.clone()],
        x: Some(x),
        panel2: None,
    };
    finalize(rng, TemplateId::ValueLookup, params, y.to_string(), distractors)
}

fn build_compare_at_x(
    spec: &ChartSpec,
    rng: &mut ChaCha8Rng,
    pi: usize,
    ai: usize,
    bi: usize,
) -> Option<Question> {
    let panel = &spec.panels[pi];
    let (a, b) = (&panel.series[ai], &panel.series[bi]);
    let mut decided: Vec<(Coord, bool)> = Vec::new();
    for &(x, ya) in &a.points {
        if let Lookup::Value(yb) = lookup_at(b, x) {
            if lookup_at(a, x) == Lookup::Value(ya) && ya != yb {
                decided.push((x, ya > yb));
            }
        }
    }
    if decided.is_empty() {
        return None;
    }
    let &(x, a_wins) = &decided[rng.random_range(0..decided.len())];
    let winner = if a_wins { a.id.clone() } else { b.id.clone() };
    let loser = if a_wins { b.id.clone() } else { a.id.clone() };
    let params = QuestionParams {
        panel: panel.id.clone(),
        series: vec![a.id.clone(), b.id.clone()],
        x: Some(x),
        panel2: None,
    };
    let distractors = vec![loser, OPT_EQUAL.to_string(), OPT_CANNOT.to_string()];
    finalize(rng, TemplateId::CompareAtX, params, winner, distractors)
}

fn build_series_max(spec: &ChartSpec, rng: &mut ChaCha8Rng, pi: usize) -> Option<Question> {
    let panel = &spec.panels[pi];
    let ranked: Vec<(String, Coord)> = panel
        .data_series()
        .map(|s| (s.id.clone(), series_max_value(s).unwrap()))
        .collect();
    if ranked.len() < 2 {
        return None;
    }
    let best = ranked.iter().map(|(_, m)| *m).max().unwrap();
    let winners: Vec<&String> =
        ranked.iter().filter(|(_, m)| *m == best).map(|(id, _)| id).collect();
    if winners.len() != 1 {
        return None;
    }
    let winner = winners[0].clone();
    // Distractor priority: random sibling candidates, then series from other
    // panels, then generic decoys. Two or more candidates plus the decoys
    // guarantee three distractors.
    let mut pool: Vec<String> =
        ranked.iter().map(|(id, _)| id.clone()).filter(|id| *id != winner).collect();
    pool.shuffle(rng);
    let mut pad: Vec<String> = spec
        .all_series()
        .filter(|(p, _)| p.id != panel.id)
        .map(|(_, s)| s.id.clone())
        .collect();
    pad.shuffle(rng);
    pool.extend(pad);
    pool.push(OPT_TIE.to_string());
    pool.push(OPT_NONE_OF.to_string());
    pool.truncate(3);
    let params = QuestionParams { panel: panel.id.clone(), series: vec![], x: None, panel2: None };
    finalize(rng, TemplateId::SeriesMax, params, winner, pool)
}

fn build_count_crossings(
    spec: &ChartSpec,
    rng: &mut ChaCha8Rng,
    pi: usize,
    ai: usize,
    bi: usize,
) -> Option<Question> {
    let panel = &spec.panels[pi];
    let (a, b) = (&panel.series[ai], &panel.series[bi]);
    let Crossings::Count(c) = crossings_on_shared_grid(a, b) else {
        return None;
    };
    let c = c as i64;
    let mut pool: Vec<i64> =
        [c - 2, c - 1, c + 1, c + 2, c + 3].into_iter().filter(|&v| v >= 0).collect();
    pool.shuffle(rng);
    let distractors = pool[..3].iter().map(|v| Coord::from_int(*v).to_string()).collect();
    let params = QuestionParams {
        panel: panel.id.clone(),
        series: vec![a.id.clone(), b.id.clone()],
        x: None,
        panel2: None,
    };
    finalize(
        rng,
        TemplateId::CountCrossings,
        params,
        Coord::from_int(c).to_string(),
        distractors,
    )
}

fn build_trend_sign(spec: &ChartSpec, rng: &mut ChaCha8Rng, pi: usize, si: usize) -> Option<Question> {
    let panel = &spec.panels[pi];
    let series = &panel.series[si];
    let trend = trend_of(series)?;
    let distractors =
        TREND_WORDS.iter().filter(|w| **w != trend.word()).map(|w| w.to_string()).collect();
    let params = QuestionParams {
        panel: panel.id.clone(),
        series: vec![series.id.clone()],
        x: None,
        panel2: None,
    };
    finalize(rng, TemplateId::TrendSign, params, trend.word().to_string(), distractors)
}

fn build_panel_compare(
    spec: &ChartSpec,
    rng: &mut ChaCha8Rng,
    p1: usize,
    p2: usize,
) -> Option<Question> {
    let (p1, p2) = if rng.random_bool(0.5) { (p2, p1) } else { (p1, p2) };
    let (first, second) = (&spec.panels[p1], &spec.panels[p2]);
    let (m1, m2) = (panel_max_value(first)?, panel_max_value(second)?);
    if m1 == m2 {
        return None;
    }
    let winner = if m1 > m2 { first.id.clone() } else { second.id.clone() };
    let loser = if m1 > m2 { second.id.clone() } else { first.id.clone() };
    let mut others: Vec<String> = spec
        .panels
        .iter()
        .map(|p| p.id.clone())
        .filter(|id| *id != first.id && *id != second.id)
        .collect();
    others.shuffle(rng);
    let fourth = others.into_iter().next().unwrap_or_else(|| OPT_CANNOT.to_string());
    let params = QuestionParams {
        panel: first.id.clone(),
        series: vec![],
        x: None,
        panel2: Some(second.id.clone()),
    };
    let distractors = vec![loser, OPT_EQUAL.to_string(), fourth];
    finalize(rng, TemplateId::PanelCompare, params, winner, distractors)
}

/// Generates up to `max_q` validated questions for a chart with all
/// templates weighted equally.
pub fn generate_questions(spec: &ChartSpec, seed: u64, max_q: usize) -> GenerationOutcome {
    generate_questions_weighted(spec, seed, max_q, &[1; N_TEMPLATES])
}

/// Generates up to `max_q` validated questions for a chart, trying
/// candidates in a weighted random order: a template with weight `2w` is
/// picked ahead of one with weight `w` twice as often, and weight 0 removes
/// a template entirely.
///
/// Every returned question passes [`Question::check`], the oracle confirms
/// its `answer_index`, and its counterfactual views satisfy the contract in
/// [`check_view_contract`]. Deterministic in `(spec, seed, weights)`.
pub fn generate_questions_weighted(
    spec: &ChartSpec,
    seed: u64,
    max_q: usize,
    weights: &[u32; N_TEMPLATES],
) -> GenerationOutcome {
    let mut rng = rng_from(seed, "questions", &[]);
    // Weighted ordering by exponential race: candidate priority is
    // u^(1/w) for u uniform in (0, 1], sorted descending, which orders
    // templates proportionally to their weights (Efraimidis-Spirakis keys).
    let mut keyed: Vec<(f64, Candidate)> = enumerate_candidates(spec)
        .into_iter()
        .filter_map(|cand| {
            let w = weights[cand.template().index()];
            let u: f64 = rng.random();
            (w > 0).then(|| ((1.0 - u).powf(1.0 / f64::from(w)), cand))
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0));
    let candidates: Vec<Candidate> = keyed.into_iter().map(|(_, c)| c).collect();
    let mut outcome = GenerationOutcome { questions: Vec::new(), attempted: 0 };
    for cand in candidates {
        if outcome.questions.len() >= max_q {
            break;
        }
        outcome.attempted += 1;
        let built = match cand {
            Candidate::ValueLookup { panel, series } => {
                build_value_lookup(spec, &mut rng, panel, series)
            }
            Candidate::CompareAtX { panel, a, b } => {
                build_compare_at_x(spec, &mut rng, panel, a, b)
            }
            Candidate::SeriesMax { panel } => build_series_max(spec, &mut rng, panel),
            Candidate::CountCrossings { panel, a, b } => {
                build_count_crossings(spec, &mut rng, panel, a, b)
            }
            Candidate::TrendSign { panel, series } => {
                build_trend_sign(spec, &mut rng, panel, series)
            }
            Candidate::PanelCompare { p1, p2 } => build_panel_compare(spec, &mut rng, p1, p2),
        };
        let Some(question) = built else {
            continue;
        };
        if validate_question(spec, &question) {
            outcome.questions.push(question);
        }
    }
    outcome
}

/// Full acceptance check for a candidate question against its chart.
pub fn validate_question(spec: &ChartSpec, question: &Question) -> bool {
    if question.check().is_err() {
        return false;
    }
    if oracle_answer(spec, question) != Ok(Verdict::Determined(question.answer_index)) {
        return false;
    }
    let Ok(views) = make_views(spec, question) else {
        return false;
    };
    check_view_contract(spec, question, &views).is_ok()
}
