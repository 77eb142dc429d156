#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use warnforge::gateway::chat_reply_body;

pub const EXPLAIN_REPLY: &str = "Explanation: Dividing by a literal zero is undefined behaviour and the program may crash. \
Fix: Check that the denominator is nonzero before dividing and return an error code otherwise.";

pub const MIN_DZ_CPP: &str = "```cpp\nint main() {\n    int zero = 0;\n    return 100 / zero;\n}\n```";

/// A local OpenAI-style endpoint answering from a closure over the prompt.
pub struct StubServer {
    pub url: String,
    hits: Arc<AtomicUsize>,
    prompts: Arc<Mutex<Vec<String>>>,
}

impl StubServer {
    pub fn start(reply: impl Fn(&str) -> String + Send + Sync + 'static) -> StubServer {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let prompts = Arc::new(Mutex::new(Vec::new()));
        let (h, p) = (hits.clone(), prompts.clone());
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                h.fetch_add(1, Ordering::SeqCst);
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut request_line = String::new();
                if reader.read_line(&mut request_line).is_err() {
                    continue;
                }
                let mut length = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                        break;
                    }
                    if let Some((k, v)) = line.split_once(':') {
                        if k.eq_ignore_ascii_case("content-length") {
                            length = v.trim().parse().unwrap_or(0);
                        }
                    }
                }
                let mut body = vec![0u8; length];
                let _ = reader.read_exact(&mut body);
                let response = if request_line.starts_with("GET") {
                    r#"{"object":"list","data":[{"id":"stub"}]}"#.to_string()
                } else {
                    let json: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
                    let prompt = json["messages"][0]["content"].as_str().unwrap_or("").to_string();
                    p.lock().unwrap().push(prompt.clone());
                    chat_reply_body(&reply(&prompt))
                };
                let _ = write!(
                    stream,
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    response.len(),
                    response
                );
            }
        });
        StubServer { url, hits, prompts }
    }

    /// Chat completions plus model listings served so far.
    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap().clone()
    }
}

/// Replies to the explain, fixed-code and extraction prompts used on dz01.
pub fn dz_model(prompt: &str) -> String {
    if prompt.starts_with("Apply the following fix") {
        format!("```cpp\n{}```", warnforge::fixtures::DZ01_FIXED_CPP)
    } else if prompt.contains("smallest complete") {
        MIN_DZ_CPP.to_string()
    } else {
        EXPLAIN_REPLY.to_string()
    }
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_warnforge")
}

/// Runs the binary in `cwd` with a fixed timestamp and no inherited config.
pub fn run(cwd: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(cwd)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .args(args)
        .output()
        .unwrap()
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn tool_on_path(name: &str) -> bool {
    which(name).is_some()
}

fn which(name: &str) -> Option<PathBuf> {
    let candidates = [name.to_string(), format!("{name}-14"), format!("{name}-15"), format!("{name}-18")];
    std::env::var_os("PATH").and_then(|paths| {
        std::env::split_paths(&paths)
            .flat_map(|d| candidates.iter().map(move |c| d.join(c)))
            .find(|p| p.is_file())
    })
}

pub fn has_clang_check() -> bool {
    tool_on_path("clang-check")
}

pub fn has_cppcheck() -> bool {
    tool_on_path("cppcheck")
}

/// Copies one bundled fixture into `dir` and returns its path as a string.
pub fn fixture(dir: &Path, rel: &str) -> String {
    let src = warnforge::fixtures::source_dir().join(rel);
    let dst = dir.join(src.file_name().unwrap());
    std::fs::copy(&src, &dst).unwrap();
    dst.to_string_lossy().into_owned()
}
