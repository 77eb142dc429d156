use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use wait_timeout::ChildExt;

use super::AnalyzerError;

#[derive(Debug)]
pub(crate) struct ProcessOutput {
    pub stdout: String,
    pub stderr: String,
    /// `None` when the process was terminated by a signal.
    pub exit_code: Option<i32>,
}

/// Runs `argv` to completion, capturing both streams, killing it after
/// `timeout`.
pub(crate) fn run_with_timeout(argv: &[String], timeout: Duration) -> Result<ProcessOutput, AnalyzerError> {
    run_in(argv, timeout, None)
}

/// [`run_with_timeout`] with an explicit working directory.
pub(crate) fn run_in(argv: &[String], timeout: Duration, cwd: Option<&Path>) -> Result<ProcessOutput, AnalyzerError> {
    let command_line = argv.join(" ");
    let (program, args) = argv.split_first().expect("non-empty argv");
    let mut cmd = Command::new(program);
    if let Some(dir) = cwd {
        cmd.current_dir(dir);
    }
    let mut child = cmd
        .args(args)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| AnalyzerError::Spawn {
            command: command_line.clone(),
            source,
        })?;

    let mut out_pipe = child.stdout.take().expect("piped stdout");
    let mut err_pipe = child.stderr.take().expect("piped stderr");
    let out_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = out_pipe.read_to_end(&mut buf);
        buf
    });
    let err_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = err_pipe.read_to_end(&mut buf);
        buf
    });

    let status = match child.wait_timeout(timeout)? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(AnalyzerError::Timeout {
                command: command_line,
                timeout_s: timeout.as_secs(),
            });
        }
    };
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();
    Ok(ProcessOutput {
        stdout: String::from_utf8_lossy(&stdout).into_owned(),
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
        exit_code: status.code(),
    })
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;

    fn sh(script: &str) -> Vec<String> {
        vec!["/bin/sh".into(), "-c".into(), script.into()]
    }

    #[test]
    fn captures_both_streams_and_exit_code() {
        let out = run_with_timeout(&sh("echo out; echo err >&2; exit 3"), Duration::from_secs(10)).unwrap();
        assert_eq!(out.stdout, "out\n");
        assert_eq!(out.stderr, "err\n");
        assert_eq!(out.exit_code, Some(3));
    }

    #[test]
    fn hung_process_times_out() {
        let err = run_with_timeout(&sh("sleep 5"), Duration::from_millis(200)).unwrap_err();
        assert!(matches!(err, AnalyzerError::Timeout { .. }));
    }

    #[test]
    fn signal_exit_has_no_code() {
        let out = run_with_timeout(&sh("kill -9 $$"), Duration::from_secs(10)).unwrap();
        assert_eq!(out.exit_code, None);
    }

    #[test]
    fn unknown_program_is_spawn_error() {
        let err = run_with_timeout(&["/no/such/binary".to_string()], Duration::from_secs(1)).unwrap_err();
        assert!(matches!(err, AnalyzerError::Spawn { .. }));
    }
}
