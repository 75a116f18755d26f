use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread::JoinHandle;

use clinseek_agent::*;
use clinseek_core::{
    names, validate_trajectory, AnswerSchema, ErrorCode, TaskGroup, TaskInstance, Termination, Timestamp,
};
use serde_json::{json, Value as Json};

/// Serves `responses` in order, one per connection, and returns the
/// decoded request bodies.
fn mock(responses: Vec<(u16, Json)>) -> (String, JoinHandle<Vec<Json>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}/v1", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            assert!(line.starts_with("POST /v1/chat/completions"), "{line}");
            let mut len = 0;
            loop {
                let mut h = String::new();
                reader.read_line(&mut h).unwrap();
                if h.trim().is_empty() {
                    break;
                }
                if let Some(v) = h.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0u8; len];
            reader.read_exact(&mut buf).unwrap();
            bodies.push(serde_json::from_slice(&buf).unwrap());
            let text = body.to_string();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{text}",
                text.len()
            )
            .unwrap();
        }
        bodies
    });
    (base, handle)
}

fn reply_call(name: &str, args: &str) -> Json {
    json!({"choices": [{"message": {
        "role": "assistant",
        "content": "reasoning here",
        "tool_calls": [{"id": "x", "type": "function", "function": {"name": wire_name(name), "arguments": args}}]
    }}]})
}

fn task() -> TaskInstance {
    TaskInstance {
        task_id: "t1".into(),
        patient_id: "10000001".into(),
        cutoff: Timestamp::parse("2150-01-01 00:00:00").unwrap(),
        instruction: "Is there a pleural effusion?".into(),
        modality_meta: vec![],
        answer_schema: AnswerSchema::single_label(Some(vec!["yes".into(), "no".into()])),
        group: TaskGroup::CxrPresence,
    }
}

fn config(base: &str) -> LlmConfig {
    LlmConfig { endpoint: base.into(), model: "m".into(), backoff_ms: 1, timeout_secs: 5, ..LlmConfig::default() }
}

fn registry() -> Registry {
    Registry::new(task().answer_schema)
}

#[test]
fn fixed_finish_reply() {
    let (base, handle) = mock(vec![(200, reply_call(names::FINISH, r#"{"answers": ["Yes"]}"#))]);
    let policy = LlmPolicy::new(config(&base)).unwrap();
    let traj = run_episode(&task(), &policy, &mut registry(), &RuntimeBudget::default());
    assert_eq!(traj.termination, Termination::Finished);
    assert_eq!(traj.final_answer, Some(vec!["yes".into()]));
    assert_eq!(traj.steps[0].call.reasoning.as_deref(), Some("reasoning here"));
    let body = &handle.join().unwrap()[0];
    assert_eq!(body["temperature"], 1.0);
    assert_eq!(body["max_tokens"], 8192);
    assert_eq!(body["model"], "m");
    assert_eq!(body["messages"][0]["role"], "system");
    assert!(body["messages"][0]["content"].as_str().unwrap().contains("ehr.finish"));
    assert!(body["messages"][1]["content"].as_str().unwrap().contains("pleural effusion"));
    assert_eq!(body["tools"][0]["function"]["name"], "ehr__finish");
}

#[test]
fn malformed_then_finish_recovers() {
    let (base, handle) = mock(vec![
        (200, reply_call(names::FINISH, "{not json")),
        (200, reply_call(names::FINISH, r#"{"answers": ["no"]}"#)),
    ]);
    let policy = LlmPolicy::new(config(&base)).unwrap();
    let traj = run_episode(&task(), &policy, &mut registry(), &RuntimeBudget::default());
    assert_eq!(traj.steps.len(), 2);
    assert_eq!(traj.steps[0].call.name, MALFORMED_TOOL);
    assert_eq!(traj.steps[0].observation.error_code, Some(ErrorCode::MalformedCall));
    assert_eq!(traj.termination, Termination::Finished);
    assert!(validate_trajectory(&traj).is_empty());
    let bodies = handle.join().unwrap();
    // the second request carries the full history including the error
    let msgs = bodies[1]["messages"].as_array().unwrap();
    assert_eq!(msgs.len(), 4);
    assert!(msgs[3]["content"].as_str().unwrap().starts_with("malformed_call"));
}

#[test]
fn history_is_replayed_as_tool_messages() {
    let (base, handle) = mock(vec![
        (200, reply_call(names::THINK, r#"{"note": "n"}"#)),
        (200, reply_call(names::FINISH, r#"{"answers": ["yes"]}"#)),
    ]);
    let policy = LlmPolicy::new(config(&base)).unwrap();
    let mut reg = Registry::new(task().answer_schema).with(Box::new(ThinkOnly));
    let traj = run_episode(&task(), &policy, &mut reg, &RuntimeBudget::default());
    assert_eq!(traj.steps.len(), 2);
    let bodies = handle.join().unwrap();
    let msgs = bodies[1]["messages"].as_array().unwrap();
    assert_eq!(msgs[2]["tool_calls"][0]["function"]["name"], "ehr__think");
    assert_eq!(msgs[2]["tool_calls"][0]["id"], "call_1");
    assert_eq!(msgs[3]["role"], "tool");
    assert_eq!(msgs[3]["tool_call_id"], "call_1");
    assert_eq!(msgs[3]["content"], "ok");
}

struct ThinkOnly;

impl ToolHandler for ThinkOnly {
    fn schemas(&self) -> Vec<clinseek_core::ToolSchema> {
        clinseek_ehr::tool_schemas().into_iter().filter(|s| s.name == names::THINK).collect()
    }

    fn call(&mut self, _: &str, _: &clinseek_core::Arguments) -> clinseek_core::ToolOutput {
        Ok("ok".into())
    }
}

#[test]
fn server_errors_exhaust_retries() {
    let (base, handle) = mock(vec![(503, json!({})); 4]);
    let policy = LlmPolicy::new(config(&base)).unwrap();
    let traj = run_episode(&task(), &policy, &mut registry(), &RuntimeBudget::default());
    assert_eq!(traj.termination, Termination::PolicyError);
    assert!(traj.steps.is_empty());
    assert_eq!(handle.join().unwrap().len(), 4);
}

#[test]
fn transient_error_then_success() {
    let (base, handle) = mock(vec![(429, json!({})), (200, reply_call(names::FINISH, r#"{"answers": []}"#))]);
    let policy = LlmPolicy::new(config(&base)).unwrap();
    let traj = run_episode(&task(), &policy, &mut registry(), &RuntimeBudget::default());
    assert_eq!(traj.termination, Termination::Finished);
    assert_eq!(handle.join().unwrap().len(), 2);
}

#[test]
fn client_error_is_not_retried() {
    let (base, handle) = mock(vec![(400, json!({"error": "bad"}))]);
    let policy = LlmPolicy::new(config(&base)).unwrap();
    let traj = run_episode(&task(), &policy, &mut registry(), &RuntimeBudget::default());
    assert_eq!(traj.termination, Termination::PolicyError);
    assert_eq!(handle.join().unwrap().len(), 1);
}

#[test]
fn unreachable_endpoint_is_policy_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let policy = LlmPolicy::new(config(&format!("http://127.0.0.1:{port}/v1"))).unwrap();
    let traj = run_episode(&task(), &policy, &mut registry(), &RuntimeBudget::default());
    assert_eq!(traj.termination, Termination::PolicyError);
}

#[test]
fn decode_variants() {
    let no_call = json!({"choices": [{"message": {"content": "I think yes"}}]});
    assert!(matches!(decode_response(&no_call).unwrap(), PolicyTurn::Malformed { raw, .. } if raw == "I think yes"));
    let array_args = reply_call(names::THINK, "[1]");
    assert!(matches!(decode_response(&array_args).unwrap(), PolicyTurn::Malformed { .. }));
    let bad_finish = reply_call(names::FINISH, r#"{"answers": "yes"}"#);
    assert!(matches!(decode_response(&bad_finish).unwrap(), PolicyTurn::Call { name, .. } if name == names::FINISH));
    let reasoning = json!({"choices": [{"message": {"content": null, "reasoning_content": "r",
        "tool_calls": [{"function": {"name": "ehr__load_ehr", "arguments": ""}}]}}]});
    match decode_response(&reasoning).unwrap() {
        PolicyTurn::Call { name, arguments, reasoning } => {
            assert_eq!(name, names::LOAD_EHR);
            assert!(arguments.is_empty());
            assert_eq!(reasoning.as_deref(), Some("r"));
        }
        other => panic!("{other:?}"),
    }
    assert!(decode_response(&json!({"error": "x"})).is_err());
    assert_eq!(unwire_name(&wire_name(names::GET_CANDIDATES_BY_KEYWORD)), names::GET_CANDIDATES_BY_KEYWORD);
}

#[test]
fn curated_prompt_carries_context() {
    let t = task();
    let budget = RuntimeBudget::default();
    let policy = LlmPolicy::new(config("http://127.0.0.1:9")).unwrap();
    let tools = registry().schemas();
    let ctx = PolicyContext { task: &t, tools: &tools, history: &[], curated_context: Some("2149-12-31 23:00:00 lactate 4.1"), budget: &budget };
    let body = policy.request_body(&ctx);
    assert!(body["messages"][1]["content"].as_str().unwrap().contains("lactate 4.1"));
    assert_eq!(body["tools"].as_array().unwrap().len(), 1);
    assert!(policy.id().ends_with(SYSTEM_PROMPT_VERSION));
}
