mod support;

use std::fs;
use std::sync::Arc;

use coach_core::demo::demo_provider;
use coach_core::DialogueStateId;
use coach_llm::{RecordingProvider, ReplayProvider};
use support::{cassette_path, demo_conversation, golden_transcript_path};

/// Regenerates the committed cassette and golden transcript from the demo
/// model when `COACH_REGEN_FIXTURES=1`.
#[test]
fn committed_cassette_matches_the_demo_model() {
    let recorder = Arc::new(RecordingProvider::new(demo_provider()));
    let (session, text) = demo_conversation(recorder.clone());
    if std::env::var("COACH_REGEN_FIXTURES").as_deref() == Ok("1") {
        recorder.cassette().save(cassette_path()).unwrap();
        fs::write(golden_transcript_path(), &text).unwrap();
    }
    assert_eq!(session.state, DialogueStateId::GoodBye);
    assert_eq!(text, fs::read_to_string(golden_transcript_path()).unwrap());
    assert_eq!(recorder.cassette().to_json(), fs::read_to_string(cassette_path()).unwrap());
}

#[test]
fn replay_reproduces_the_golden_transcript() {
    let golden = fs::read(golden_transcript_path()).unwrap();
    for _ in 0..2 {
        let provider = Arc::new(ReplayProvider::from_file(cassette_path()).unwrap());
        let (session, text) = demo_conversation(provider);
        assert_eq!(text.as_bytes(), golden.as_slice());
        let visited: Vec<_> = session.history.iter().map(|e| e.state).collect();
        for state in DialogueStateId::ALL {
            assert!(visited.contains(&state), "{state} never visited");
        }
    }
}
