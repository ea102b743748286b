mod common;

use std::io::Write;

use common::{persona_for, session_from_user_texts, synthetic};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stylesim::policies::{PolicyConfig, PolicyKind};
use stylesim::replay::output::write_summary_csv;
use stylesim::replay::{
    filter_sessions, frontier, hybrid_saturation_rate, load_corpus, parse_external, run_ablation,
    run_session, window_ablation, CorpusFormat, ReplayContext,
};

fn all_policies() -> Vec<PolicyConfig> {
    PolicyKind::ALL.into_iter().map(PolicyConfig::new).collect()
}

#[test]
fn anchor_identities_hold_per_turn() {
    let sessions = synthetic(40, 1);
    let persona = persona_for(&sessions).anchored_to_archetype();
    let ctx = ReplayContext::new(&persona);
    for s in &sessions {
        let un = run_session(&PolicyConfig::new(PolicyKind::Uncapped), s, &ctx).unwrap();
        let st = run_session(&PolicyConfig::new(PolicyKind::Static), s, &ctx).unwrap();
        assert!(un.turns.iter().all(|t| t.synchrony == 1.0));
        for t in &st.turns {
            assert_eq!(
                (t.stability, t.coherence, t.churn, t.flipped),
                (1.0, 1.0, 0, false)
            );
        }
        assert_eq!(st.summary.flip_rate, 0.0);
        assert_eq!(st.summary.legibility, 1.0);
        assert_eq!(un.turns.len(), s.user_turns().count());
        // Static synchrony and Uncapped coherence are the same cosine when
        // the coherence anchor is the Static target.
        for (a, b) in st.turns.iter().zip(&un.turns) {
            assert!((a.synchrony - b.coherence).abs() < 1e-12);
        }
    }
}

#[test]
fn frontier_extremes() {
    let sessions = synthetic(30, 2);
    let persona = persona_for(&sessions);
    let ctx = ReplayContext::new(&persona);
    let summaries = run_ablation(&all_policies(), &sessions, &ctx).unwrap();
    let points = frontier(&summaries);
    let max_stab = points
        .iter()
        .map(|p| p.mean_stability)
        .fold(f64::MIN, f64::max);
    let max_sync = points
        .iter()
        .map(|p| p.mean_synchrony)
        .fold(f64::MIN, f64::max);
    let get = |name: &str| points.iter().find(|p| p.policy == name).unwrap();
    assert_eq!(get("static").mean_stability, 1.0);
    assert_eq!(max_stab, 1.0);
    assert_eq!(get("uncapped").mean_synchrony, 1.0);
    assert_eq!(max_sync, 1.0);
    for ps in &summaries {
        assert_eq!(ps.n_sessions, sessions.len());
    }
}

#[test]
fn session_order_does_not_matter() {
    let sessions = synthetic(25, 3);
    let persona = persona_for(&sessions);
    let ctx = ReplayContext::new(&persona);
    let base = run_ablation(&all_policies(), &sessions, &ctx).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let mut shuffled = sessions.clone();
        shuffled.shuffle(&mut rng);
        assert_eq!(
            run_ablation(&all_policies(), &shuffled, &ctx).unwrap(),
            base
        );
    }
}

#[test]
fn removing_a_session_only_moves_aggregates() {
    let sessions = synthetic(20, 4);
    let persona = persona_for(&sessions);
    let ctx = ReplayContext::new(&persona);
    let full = run_ablation(&all_policies(), &sessions, &ctx).unwrap();
    let dropped = sessions[7].session_id.clone();
    let fewer: Vec<_> = sessions
        .iter()
        .filter(|s| s.session_id != dropped)
        .cloned()
        .collect();
    let part = run_ablation(&all_policies(), &fewer, &ctx).unwrap();
    for (f, p) in full.iter().zip(&part) {
        let kept: Vec<_> = f
            .sessions
            .iter()
            .filter(|s| s.session_id != dropped)
            .cloned()
            .collect();
        assert_eq!(kept, p.sessions);
        assert_eq!(p.n_sessions, f.n_sessions - 1);
    }
}

#[test]
fn cache_fixture_hits_twice_in_ten() {
    let texts = [
        "Could you help me plan the weekend?",
        "Okay, I see.",
        "I am worried about the budget.",
        "Okay, I see.",
        "My sister is visiting on Saturday.",
        "We might go to the concert together!",
        "Okay, I see.",
        "I think the weather will be awful.",
        "Please remind me to buy the tickets.",
        "Thanks, that was really helpful.",
    ];
    let s = session_from_user_texts("cache", &texts);
    let sessions = synthetic(20, 5);
    let persona = persona_for(&sessions);
    let ctx = ReplayContext::new(&persona);
    let cached = run_session(&PolicyConfig::new(PolicyKind::HybridCache), &s, &ctx).unwrap();
    // Hand count: the first occurrence misses, the two repeats hit.
    let hits: Vec<bool> = cached.turns.iter().map(|t| t.cache_hit).collect();
    let expected = [
        false, false, false, true, false, false, true, false, false, false,
    ];
    assert_eq!(hits, expected);
    assert!((cached.summary.cache_hit_rate - 0.2).abs() < 1e-12);
    let plain = run_session(&PolicyConfig::new(PolicyKind::Hybrid), &s, &ctx).unwrap();
    assert_eq!(plain.summary.cache_hit_rate, 0.0);
    assert!((cached.summary.synchrony - plain.summary.synchrony).abs() < 0.02);
}

#[test]
fn cap_and_hybrid_agree_when_saturated() {
    let sessions = synthetic(60, 6);
    let persona = persona_for(&sessions);
    let ctx = ReplayContext::new(&persona);
    let rate =
        hybrid_saturation_rate(&sessions, &ctx, &PolicyConfig::new(PolicyKind::Hybrid)).unwrap();
    let s = run_ablation(
        &[
            PolicyConfig::new(PolicyKind::Cap),
            PolicyConfig::new(PolicyKind::Hybrid),
        ],
        &sessions,
        &ctx,
    )
    .unwrap();
    if rate > 0.95 {
        for m in ["synchrony", "stability"] {
            assert!((s[0].mean(m) - s[1].mean(m)).abs() <= 0.005, "{m}");
        }
    }
    assert!((0.0..=1.0).contains(&rate));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let sessions = synthetic(15, 7);
    let persona = persona_for(&sessions);
    let ctx = ReplayContext::new(&persona);
    let render = || {
        let s = run_ablation(&all_policies(), &sessions, &ctx).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, "# run", "synthetic", &s, true).unwrap();
        buf
    };
    assert_eq!(render(), render());
}

#[test]
fn window_ablation_reports_every_window() {
    let sessions = synthetic(30, 8);
    let persona = persona_for(&sessions);
    let ctx = ReplayContext::new(&persona);
    let rows = window_ablation(&sessions, &ctx, &[1, 3, 5, 8]).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.window).collect::<Vec<_>>(),
        [1, 3, 5, 8]
    );
    assert!(rows[0].predictive_synchrony.is_some());
    assert!(rows.windows(2).all(|w| w[0].n_sessions >= w[1].n_sessions));
}

#[test]
fn session_jsonl_from_disk() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    let lines = [
        r#"{"session_id":"a","participant_id":"p1","event_type":"user_message","text":"hi there","turn":1}"#,
        r#"{"session_id":"a","participant_id":"p1","event_type":"bot_response","text":"hello!","turn":1}"#,
        r#"{"session_id":"a","participant_id":"p1","event_type":"user_message","text":"how are you","turn":2}"#,
        r#"{"session_id":"a","participant_id":"p1","event_type":"system","text":"x","turn":2}"#,
        r#"{"session_id":"a","participant_id":"p1","event_type":"user_message","text":"dup","turn":2}"#,
        "not json",
    ];
    writeln!(f, "{}", lines.join("\n")).unwrap();
    let parsed = load_corpus(f.path(), CorpusFormat::Jsonl, "disk").unwrap();
    assert_eq!(parsed.sessions.len(), 1);
    assert_eq!(parsed.sessions[0].turns.len(), 3);
    assert_eq!(parsed.rejects.len(), 3);
}

#[test]
fn daily_dialog_lines_alternate() {
    let src = "Hi , how are you ? __eou__ Fine , thanks . __eou__ Any plans ? __eou__ Not yet . __eou__ Want to go out ? __eou__ Sure ! __eou__\n\
               Short one . __eou__ Yes . __eou__\n";
    let sessions = parse_external(src, CorpusFormat::DailyDialog, "dd").unwrap();
    assert_eq!(sessions.len(), 2);
    assert_eq!(sessions[0].user_turns().count(), 3);
    assert_eq!(sessions[0].bot_turns().count(), 3);
    assert_eq!(filter_sessions(sessions).len(), 1);
}

fn export_count(var: &str, format: CorpusFormat, expected: f64) {
    let path = std::env::var(var).unwrap_or_else(|_| panic!("set {var} to the full export"));
    let src = std::fs::read_to_string(&path).unwrap();
    let n = filter_sessions(parse_external(&src, format, "export").unwrap()).len() as f64;
    assert!((n - expected).abs() <= 0.01 * expected, "{n} sessions");
}

#[test]
#[ignore = "needs the DailyDialog export (DAILYDIALOG_TEXT)"]
fn daily_dialog_full_export_count() {
    export_count("DAILYDIALOG_TEXT", CorpusFormat::DailyDialog, 12_539.0);
}

#[test]
#[ignore = "needs the EmpatheticDialogues export (EMPATHETIC_JSON)"]
fn empathetic_full_export_count() {
    export_count("EMPATHETIC_JSON", CorpusFormat::Empathetic, 24_849.0);
}
