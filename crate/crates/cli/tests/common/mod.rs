#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, ExitStatus, Stdio};

pub struct Output {
    pub status: ExitStatus,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    pub fn code(&self) -> Option<i32> {
        self.status.code()
    }
}

pub fn stratincon(ws: &Path) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stratincon"));
    cmd.arg("--workspace")
        .arg(ws)
        .env_remove("STRATINCON_WORKSPACE");
    cmd
}

pub fn run(mut cmd: Command, stdin: Option<&[u8]>) -> Output {
    cmd.stdin(if stdin.is_some() {
        Stdio::piped()
    } else {
        Stdio::null()
    })
    .stdout(Stdio::piped())
    .stderr(Stdio::piped());
    let mut child = cmd.spawn().expect("binary starts");
    if let Some(bytes) = stdin {
        child.stdin.take().unwrap().write_all(bytes).unwrap();
    }
    let out = child.wait_with_output().unwrap();
    Output {
        status: out.status,
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn ok(ws: &Path, args: &[&str], stdin: Option<&[u8]>) -> Result<Output, String> {
    let mut cmd = stratincon(ws);
    cmd.args(args);
    let out = run(cmd, stdin);
    if out.status.success() {
        Ok(out)
    } else {
        Err(format!(
            "{args:?} exited {:?}: {}",
            out.code(),
            out.stderr.trim()
        ))
    }
}

/// Raw HTTP/1.1 GET; returns the status line and body.
pub fn http_get(addr: &str, path: &str) -> Result<(String, String), String> {
    let mut s = TcpStream::connect(addr).map_err(|e| e.to_string())?;
    write!(
        s,
        "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .map_err(|e| e.to_string())?;
    let mut raw = String::new();
    s.read_to_string(&mut raw).map_err(|e| e.to_string())?;
    let (head, body) = raw.split_once("\r\n\r\n").ok_or("no header terminator")?;
    Ok((
        head.lines().next().unwrap_or("").to_string(),
        body.to_string(),
    ))
}

/// Starts `serve` on an ephemeral port, runs `probe` against it, then sends
/// SIGTERM. Returns the probe result and whether the server exited 0.
pub fn with_server<T>(ws: &Path, probe: impl FnOnce(&str) -> T) -> Result<(T, bool), String> {
    let mut cmd = stratincon(ws);
    cmd.args(["serve", "--bind", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null());
    let mut child = cmd.spawn().map_err(|e| e.to_string())?;
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .map_err(|e| e.to_string())?;
    let Some(addr) = line
        .trim()
        .strip_prefix("listening on http://")
        .map(str::to_string)
    else {
        let _ = child.kill();
        return Err(format!("unexpected first line {line:?}"));
    };
    let result = probe(&addr);
    Command::new("kill")
        .args(["-TERM", &child.id().to_string()])
        .status()
        .map_err(|e| e.to_string())?;
    let status = child.wait().map_err(|e| e.to_string())?;
    Ok((result, status.success()))
}

/// `gen | ingest`, a small training run, `analyze`, then one request
/// against `serve`. Every step must exit 0.
pub fn pipeline_smoke(ws: &Path) -> Result<(), String> {
    let log = ok(ws, &["gen", "--seed", "7", "--frames", "2200"], None)?;
    let ingested = ok(ws, &["ingest"], Some(log.stdout.as_bytes()))?;
    if ingested.stdout.trim() != "ingested syn-000007" {
        return Err(format!("ingest printed {:?}", ingested.stdout));
    }
    ok(
        ws,
        &["train", "--seed", "1", "--epochs", "2", "--hidden", "8"],
        None,
    )?;
    ok(ws, &["analyze"], None)?;
    if !ws.join("bundles/syn-000007.json").is_file() {
        return Err("analyze wrote no bundle".into());
    }
    let (resp, clean_exit) = with_server(ws, |addr| {
        http_get(addr, "/api/matches/syn-000007/inconsistencies")
    })?;
    let (status, body) = resp?;
    if !status.starts_with("HTTP/1.1 200") {
        return Err(format!("serve answered {status}: {body}"));
    }
    if !clean_exit {
        return Err("serve did not exit 0 on SIGTERM".into());
    }
    Ok(())
}
