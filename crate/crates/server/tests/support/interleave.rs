//! Randomized interleavings of edits, requests, stream steps and client
//! verdicts against the engine, with invariant checks after every event.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ghostline_core::backend::{build_corpus, MockBackend};
use ghostline_core::{CancelToken, Cursor, LanguageFamily, RequestOrigin};
use ghostline_server::{
    CompletionRequest, Engine, EngineConfig, GenerationTask, IndicatorState, ManualClock, Step,
    TelemetryEvent, TelemetryKind, TextEdit,
};

const PY: &str = "import math


def area(r):
    if r < 0:
        raise ValueError(r)
    return math.pi * r * r


class Shape:
    def __init__(self, name):
        self.name = name

    def describe(self):
        for part in self.name.split():
            print(part)
        return self.name
";

const C: &str = "#include <stdio.h>

int sum(int *xs, int n) {
    int total = 0;
    for (int i = 0; i < n; i++) {
        total += xs[i];
    }
    return total;
}

int main(void) {
    int xs[3] = {1, 2, 3};
    if (sum(xs, 3) > 5) {
        printf(\"big\\n\");
    }
    return 0;
}
";

const DOCS: [(&str, &str, &str); 2] = [
    ("file:///w/shapes.py", "python", PY),
    ("file:///w/sum.c", "c", C),
];

#[derive(Debug, Default, Clone)]
pub struct InterleaveReport {
    pub sequences: usize,
    pub events: usize,
    pub requests: usize,
    pub generations: usize,
    pub cancelled_generations: usize,
    pub displayed: usize,
    pub accepted: usize,
    pub max_live_per_document: usize,
    pub max_chunks_after_cancel: usize,
    pub single_flight_violations: usize,
    pub cancelled_suggestions_returned: usize,
    pub indicator_violations: usize,
    pub telemetry_violations: usize,
    pub first_failure: Option<String>,
}

impl InterleaveReport {
    pub fn clean(&self) -> bool {
        self.single_flight_violations == 0
            && self.cancelled_suggestions_returned == 0
            && self.indicator_violations == 0
            && self.telemetry_violations == 0
            && self.max_chunks_after_cancel <= 1
    }

    fn fail(&mut self, what: String) {
        if self.first_failure.is_none() {
            self.first_failure = Some(what);
        }
    }
}

struct Running {
    uri: &'static str,
    task: GenerationTask,
    cancel: CancelToken,
    /// An edit, cursor move or newer request hit this document.
    invalidated: bool,
}

fn invalidate(running: &mut [Running], uri: &str) {
    for r in running.iter_mut().filter(|r| r.uri == uri) {
        r.invalidated = true;
    }
}

struct Doc {
    uri: &'static str,
    truth: &'static str,
    typed: usize,
    version: u64,
}

pub fn run_interleavings(
    base_seed: u64,
    sequences: usize,
    events_per_sequence: usize,
) -> InterleaveReport {
    let corpus = build_corpus(
        [
            (PY, LanguageFamily::IndentScoped),
            (C, LanguageFamily::BraceScoped),
        ],
        0.2,
    );
    let mut report = InterleaveReport::default();
    for s in 0..sequences {
        let seed = base_seed.wrapping_add(s as u64);
        let backend = MockBackend::new(corpus.clone()).with_fallback(true);
        run_one(seed, backend, events_per_sequence, &mut report);
        report.sequences += 1;
    }
    report
}

fn run_one(seed: u64, backend: MockBackend, events: usize, report: &mut InterleaveReport) {
    let mut rng = StdRng::seed_from_u64(seed);
    let clock = ManualClock::new(0);
    let mut config = EngineConfig::default();
    config.invalidate_on_cursor_move = rng.gen_bool(0.7);
    let mut engine = Engine::new(config, Arc::new(backend), Arc::new(clock.clone()));
    let mut docs: Vec<Doc> = DOCS
        .iter()
        .map(|(uri, lang, truth)| {
            let typed = rng.gen_range(0..truth.len() / 2);
            let typed = (0..=typed)
                .rev()
                .find(|&i| truth.is_char_boundary(i))
                .unwrap_or(0);
            engine.open_document(uri, &truth[..typed], Some(lang), 1);
            Doc {
                uri,
                truth,
                typed,
                version: 1,
            }
        })
        .collect();
    let mut running: Vec<Running> = Vec::new();
    let mut delivered: Vec<u64> = Vec::new();
    let mut suggestions: HashMap<u64, (&'static str, Cursor, String)> = HashMap::new();
    let mut shown: Vec<u64> = Vec::new();
    let mut notes: BTreeMap<u64, Vec<IndicatorState>> = BTreeMap::new();
    let mut telemetry: Vec<TelemetryEvent> = Vec::new();
    let tag = |what: &str| format!("seed {seed}: {what}");

    for _ in 0..events {
        report.events += 1;
        let d = rng.gen_range(0..docs.len());
        match rng.gen_range(0..100) {
            // keystroke: next character of the ground truth
            0..=24 => {
                let doc = &mut docs[d];
                let Some(c) = doc.truth[doc.typed..].chars().next() else {
                    continue;
                };
                let text = engine.document(doc.uri).unwrap().text().to_string();
                let at = end_of(&text);
                doc.version += 1;
                doc.typed += c.len_utf8();
                let edit = TextEdit::Range {
                    start: at,
                    end: at,
                    text: c.to_string(),
                };
                engine
                    .apply_document_edit(doc.uri, doc.version, &[edit])
                    .unwrap();
                invalidate(&mut running, doc.uri);
            }
            // request at the end of the text or somewhere random
            25..=44 => {
                let doc = &docs[d];
                let current = engine.document(doc.uri).unwrap();
                let cursor = if rng.gen_bool(0.7) {
                    current.end()
                } else {
                    let line = rng.gen_range(0..current.line_count());
                    Cursor::new(line, rng.gen_range(0..=current.line_len(line)))
                };
                let version = if rng.gen_bool(0.05) {
                    doc.version.saturating_sub(1)
                } else {
                    doc.version
                };
                let origin = RequestOrigin {
                    explicit_shortcut: rng.gen_bool(0.1),
                    notebook_cell: None,
                };
                let req = CompletionRequest {
                    uri: doc.uri.into(),
                    version,
                    cursor,
                    origin,
                };
                report.requests += 1;
                invalidate(&mut running, doc.uri);
                match engine.handle_inline_completion(&req).unwrap() {
                    Step::Done(r) => {
                        if let Some(s) = r.suggestion {
                            delivered.push(r.request_id);
                            suggestions.insert(r.request_id, (doc.uri, s.start, s.text));
                        }
                    }
                    Step::Pending(task) => {
                        report.generations += 1;
                        let cancel = task.cancel_token();
                        running.push(Running {
                            uri: doc.uri,
                            task,
                            cancel,
                            invalidated: false,
                        });
                    }
                }
            }
            // pull one chunk
            45..=69 => {
                if running.is_empty() {
                    continue;
                }
                let i = rng.gen_range(0..running.len());
                running[i].task.step(&clock);
            }
            // hand a task back (finished or not)
            70..=77 => {
                if running.is_empty() {
                    continue;
                }
                let i = rng.gen_range(0..running.len());
                let r = running.swap_remove(i);
                finish(
                    &mut engine,
                    r,
                    &clock,
                    &mut delivered,
                    &mut suggestions,
                    report,
                    &tag,
                );
            }
            78..=83 => {
                if let Some(&id) = pick(&mut rng, &delivered) {
                    if engine.mark_displayed(id).is_ok() {
                        shown.push(id);
                        // the user often answers right away
                        if rng.gen_bool(0.4) {
                            clock.advance(rng.gen_range(0..1200));
                            accept(
                                &mut engine,
                                &mut docs,
                                &mut running,
                                &suggestions,
                                id,
                                &mut rng,
                            );
                        }
                    }
                }
            }
            84..=88 => {
                if let Some(&id) = pick(&mut rng, &shown) {
                    clock.advance(rng.gen_range(0..1200));
                    accept(
                        &mut engine,
                        &mut docs,
                        &mut running,
                        &suggestions,
                        id,
                        &mut rng,
                    );
                }
            }
            89..=91 => {
                if let Some(&id) = pick(&mut rng, &shown) {
                    let _ = engine.reject_suggestion(id);
                }
            }
            92..=94 => {
                engine.cursor_moved(docs[d].uri);
                if engine.config().invalidate_on_cursor_move {
                    invalidate(&mut running, docs[d].uri);
                }
            }
            _ => clock.advance(rng.gen_range(0..1500)),
        }
        check_live(&engine, &running, &docs, report, &tag);
        collect(&mut engine, &mut notes, &mut telemetry, report, &tag);
    }
    for r in running.drain(..) {
        finish(
            &mut engine,
            r,
            &clock,
            &mut delivered,
            &mut suggestions,
            report,
            &tag,
        );
    }
    engine.shutdown();
    collect(&mut engine, &mut notes, &mut telemetry, report, &tag);
    for (id, states) in &notes {
        if states.as_slice() != [IndicatorState::Started, IndicatorState::Finished] {
            report.indicator_violations += 1;
            report.fail(tag(&format!("request {id} indicator sequence {states:?}")));
        }
    }
    check_telemetry(&telemetry, report, &tag);
}

fn accept(
    engine: &mut Engine,
    docs: &mut [Doc],
    running: &mut [Running],
    suggestions: &HashMap<u64, (&'static str, Cursor, String)>,
    id: u64,
    rng: &mut StdRng,
) {
    if engine.accept_suggestion(id).is_ok() && rng.gen_bool(0.8) {
        let (uri, at, text) = suggestions[&id].clone();
        let doc = docs.iter_mut().find(|doc| doc.uri == uri).unwrap();
        doc.version += 1;
        let edit = TextEdit::Range {
            start: at,
            end: at,
            text,
        };
        engine
            .apply_document_edit(uri, doc.version, &[edit])
            .unwrap();
        invalidate(running, uri);
    }
}

/// Mostly the newest item, sometimes a stale one.
fn pick<'a, T>(rng: &mut StdRng, items: &'a [T]) -> Option<&'a T> {
    if rng.gen_bool(0.75) {
        return items.last();
    }
    (!items.is_empty()).then(|| &items[rng.gen_range(0..items.len())])
}

fn end_of(text: &str) -> Cursor {
    ghostline_core::document::cursor_after(Cursor::new(0, 0), text)
}

fn finish(
    engine: &mut Engine,
    r: Running,
    clock: &ManualClock,
    delivered: &mut Vec<u64>,
    suggestions: &mut HashMap<u64, (&'static str, Cursor, String)>,
    report: &mut InterleaveReport,
    tag: &dyn Fn(&str) -> String,
) {
    let outcome = r.task.run(clock);
    report.max_chunks_after_cancel = report
        .max_chunks_after_cancel
        .max(outcome.chunks_after_cancel);
    let externally_cancelled = r.invalidated;
    if externally_cancelled {
        report.cancelled_generations += 1;
    }
    let id = outcome.request_id;
    let response = engine.complete_generation(outcome);
    if let Some(s) = &response.suggestion {
        if externally_cancelled {
            report.cancelled_suggestions_returned += 1;
            report.fail(tag(&format!(
                "cancelled request {id} returned {:?}",
                s.text
            )));
        }
        delivered.push(response.request_id);
        suggestions.insert(response.request_id, (r.uri, s.start, s.text.clone()));
    }
}

fn check_live(
    engine: &Engine,
    running: &[Running],
    docs: &[Doc],
    report: &mut InterleaveReport,
    tag: &dyn Fn(&str) -> String,
) {
    for doc in docs {
        let engine_live = engine.live_generations(doc.uri);
        let stream_live = running
            .iter()
            .filter(|r| r.uri == doc.uri && !r.cancel.is_cancelled() && !r.task.is_finished())
            .count();
        let unstopped = running
            .iter()
            .filter(|r| r.uri == doc.uri && r.invalidated && !r.cancel.is_cancelled())
            .count();
        if unstopped > 0 {
            report.single_flight_violations += 1;
            report.fail(tag(&format!(
                "{unstopped} invalidated generations not cancelled on {}",
                doc.uri
            )));
        }
        let live = engine_live.max(stream_live);
        report.max_live_per_document = report.max_live_per_document.max(live);
        if live > 1 {
            report.single_flight_violations += 1;
            report.fail(tag(&format!("{live} live generations on {}", doc.uri)));
        }
    }
}

fn collect(
    engine: &mut Engine,
    notes: &mut BTreeMap<u64, Vec<IndicatorState>>,
    telemetry: &mut Vec<TelemetryEvent>,
    report: &mut InterleaveReport,
    tag: &dyn Fn(&str) -> String,
) {
    for n in engine.take_notifications() {
        let states = notes.entry(n.request_id).or_default();
        let ok = match n.state {
            IndicatorState::Started => states.is_empty(),
            IndicatorState::Finished => states.as_slice() == [IndicatorState::Started],
        };
        if !ok {
            report.indicator_violations += 1;
            report.fail(tag(&format!(
                "request {} got {:?} after {states:?}",
                n.request_id, n.state
            )));
        }
        states.push(n.state);
    }
    telemetry.extend(engine.take_telemetry());
}

fn check_telemetry(
    events: &[TelemetryEvent],
    report: &mut InterleaveReport,
    tag: &dyn Fn(&str) -> String,
) {
    #[derive(Default)]
    struct Life {
        requested: usize,
        terminal: usize,
        displayed: bool,
        verdicts: usize,
        verdict_before_display: bool,
    }
    let mut lives: HashMap<u64, Life> = HashMap::new();
    for e in events {
        if e.kind == TelemetryKind::Typed {
            continue;
        }
        let life = lives.entry(e.request_id).or_default();
        match e.kind {
            TelemetryKind::Requested => life.requested += 1,
            TelemetryKind::Accepted | TelemetryKind::Rejected => {
                life.verdicts += 1;
                life.verdict_before_display |= !life.displayed;
            }
            k if k.is_terminal() => {
                life.terminal += 1;
                if k == TelemetryKind::Displayed {
                    life.displayed = true;
                    report.displayed += 1;
                }
            }
            _ => {}
        }
        if e.kind == TelemetryKind::Accepted {
            report.accepted += 1;
        }
    }
    for (id, life) in &lives {
        let ok = life.requested == 1
            && life.terminal == 1
            && !life.verdict_before_display
            && life.verdicts == usize::from(life.displayed);
        if !ok {
            report.telemetry_violations += 1;
            report.fail(tag(&format!(
                "request {id}: requested {} terminal {} displayed {} verdicts {}",
                life.requested, life.terminal, life.displayed, life.verdicts
            )));
        }
    }
}
