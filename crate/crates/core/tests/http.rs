use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use pakpa::eval::{EvalError, ExternalScorer, SimilarityScorer};
use pakpa::llm::{complete, ChatBackend, HttpBackend, LlmConfig, LlmError, ResponseCache};
use serde_json::{json, Value};

struct Seen {
    authorization: Option<String>,
    body: Value,
}

/// Serves the canned `(status, body)` responses in order, one per
/// connection, and reports each request it saw.
fn serve(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<Seen>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut length = 0;
            let mut authorization = None;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (name, value) = line.split_once(':').unwrap_or((line, ""));
                match name.to_ascii_lowercase().as_str() {
                    "content-length" => length = value.trim().parse().unwrap(),
                    "authorization" => authorization = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            let mut raw = vec![0; length];
            reader.read_exact(&mut raw).unwrap();
            let _ = tx.send(Seen {
                authorization,
                body: serde_json::from_slice(&raw).unwrap_or(Value::Null),
            });
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, rx)
}

fn chat_reply(text: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

fn config(url: &str, key_var: &str) -> LlmConfig {
    LlmConfig {
        endpoint_url: url.to_string(),
        api_key_env_var: key_var.to_string(),
        retry_backoff_ms: 1,
        max_retries: 2,
        timeout: Duration::from_secs(5),
        ..LlmConfig::default()
    }
}

fn backend(cfg: &LlmConfig) -> HttpBackend {
    HttpBackend::new(&cfg.endpoint_url, &cfg.api_key_env_var, cfg.timeout).unwrap()
}

#[test]
fn chat_request_carries_model_prompt_and_key() {
    std::env::set_var("PAKPA_TEST_KEY_OK", "secret");
    let (url, seen) = serve(vec![(200, chat_reply("[]"))]);
    let cfg = config(&url, "PAKPA_TEST_KEY_OK");
    let http = backend(&cfg);
    let cache = ResponseCache::in_memory();
    assert_eq!(complete("Sentence: ok.", &cfg, &cache, &http).unwrap(), "[]");

    let req = seen.recv().unwrap();
    assert_eq!(req.authorization.as_deref(), Some("Bearer secret"));
    assert_eq!(req.body["model"], json!(cfg.model_name));
    assert_eq!(req.body["messages"][0]["content"], json!("Sentence: ok."));
    assert_eq!(req.body["temperature"], json!(0.0));

    // second call is served from the cache
    assert_eq!(complete("Sentence: ok.", &cfg, &cache, &http).unwrap(), "[]");
    assert_eq!(http.calls(), 1);
}

#[test]
fn server_errors_are_retried() {
    std::env::set_var("PAKPA_TEST_KEY_RETRY", "k");
    let (url, _seen) = serve(vec![
        (500, "{}".into()),
        (503, "{}".into()),
        (200, chat_reply("Friendly staff.")),
    ]);
    let cfg = config(&url, "PAKPA_TEST_KEY_RETRY");
    let http = backend(&cfg);
    let got = complete("p", &cfg, &ResponseCache::in_memory(), &http).unwrap();
    assert_eq!(got, "Friendly staff.");
    assert_eq!(http.calls(), 3);
}

#[test]
fn retries_are_bounded() {
    std::env::set_var("PAKPA_TEST_KEY_BOUND", "k");
    let (url, _seen) = serve(vec![(500, "{}".into()); 3]);
    let cfg = config(&url, "PAKPA_TEST_KEY_BOUND");
    let http = backend(&cfg);
    match complete("p", &cfg, &ResponseCache::in_memory(), &http) {
        Err(LlmError::NetworkError { attempts, .. }) => assert_eq!(attempts, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn client_errors_are_not_retried() {
    std::env::set_var("PAKPA_TEST_KEY_401", "k");
    let (url, _seen) = serve(vec![(401, "{}".into())]);
    let cfg = config(&url, "PAKPA_TEST_KEY_401");
    let http = backend(&cfg);
    assert!(matches!(
        complete("p", &cfg, &ResponseCache::in_memory(), &http),
        Err(LlmError::HttpError(401))
    ));
    assert_eq!(http.calls(), 1);
}

#[test]
fn missing_key_fails_before_any_request() {
    let cfg = config("http://127.0.0.1:9/", "PAKPA_TEST_KEY_NEVER_SET");
    let http = backend(&cfg);
    assert!(matches!(
        complete("p", &cfg, &ResponseCache::in_memory(), &http),
        Err(LlmError::AuthMissing(var)) if var == "PAKPA_TEST_KEY_NEVER_SET"
    ));
    assert_eq!(http.calls(), 0);
}

#[test]
fn external_scorer_posts_all_pairs_in_one_request() {
    let (url, seen) = serve(vec![(200, json!({"scores": [0.9, 0.1, 0.2, 0.8]}).to_string())]);
    let scorer = ExternalScorer::new(url, Duration::from_secs(5)).unwrap();
    let cands = vec!["a".to_string(), "b".to_string()];
    let refs = vec!["x".to_string(), "y".to_string()];
    let m = scorer.score_matrix(&cands, &refs).unwrap();
    assert_eq!(m, vec![vec![0.9, 0.1], vec![0.2, 0.8]]);
    let req = seen.recv().unwrap();
    assert_eq!(
        req.body["pairs"],
        json!([
            {"candidate": "a", "reference": "x"},
            {"candidate": "a", "reference": "y"},
            {"candidate": "b", "reference": "x"},
            {"candidate": "b", "reference": "y"},
        ])
    );
}

#[test]
fn external_scorer_rejects_bad_replies() {
    let (url, _seen) = serve(vec![
        (200, json!({"scores": [0.5]}).to_string()),
        (200, json!({"scores": [1.5]}).to_string()),
        (500, "{}".into()),
    ]);
    let scorer = ExternalScorer::new(url, Duration::from_secs(5)).unwrap();
    let two = ["a".to_string(), "b".to_string()];
    assert!(matches!(scorer.score_matrix(&two, &two[..1]), Err(EvalError::Scorer(_))));
    assert!(matches!(scorer.score("a", "b"), Err(EvalError::Scorer(_))));
    assert!(matches!(scorer.score("a", "b"), Err(EvalError::Scorer(_))));
}
