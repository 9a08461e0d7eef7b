use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chainmail::corpus::{file, FILES};

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        for (name, contents) in FILES {
            std::fs::write(dir.path().join(name), contents).unwrap();
        }
        Workspace { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn cmd(&self) -> Command {
        let mut c = Command::new(env!("CARGO_BIN_EXE_chainmail"));
        c.current_dir(self.dir.path()).env_remove("CHAINMAIL_SEED");
        c
    }

    fn check(&self, internal: &str, external: &str, driver: &str, spec: &str, extra: &[&str]) -> Output {
        self.cmd()
            .args(["check", "--internal", internal, "--external", external, "--driver", driver, "--spec", spec])
            .args(extra)
            .output()
            .unwrap()
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn exit_codes_follow_the_verdict() {
    let w = Workspace::new();
    let ok = w.check("safe_v1.loo", "safe_clients.loo", "@safe_thief.drv", "safe.cmail", &[]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["status"], "no_violation_found");

    let bad = w.check("safe_v2.loo", "safe_clients.loo", "@safe_lockpick.drv", "safe.cmail", &[]);
    assert_eq!(bad.status.code(), Some(1));
    let r = json(&bad);
    assert_eq!(r["status"], "violated");
    assert_eq!(r["witnesses"][0]["position"], 3);
    assert_eq!(r["witnesses"][0]["assertion"], "holistic");
    assert!(r["witnesses"][0]["bindings"]["s"]["addr"].is_u64());

    let capped = w.check("dom.loo", "dom_clients.loo", "@dom_polite.drv", "dom.cmail", &["--set-cap", "3"]);
    assert_eq!(capped.status.code(), Some(2), "{}", stdout(&capped));
    let r = json(&capped);
    assert_eq!(r["status"], "withheld");
    assert!(r["caveats"].as_array().unwrap().iter().any(|c| c == "set-cap-exceeded"));
}

#[test]
fn report_has_the_documented_keys() {
    let w = Workspace::new();
    let o = w.check("bank_v1_drain.loo", "bank_clients.loo", "@bank_drain.drv", "bank.cmail", &["--max-steps", "500"]);
    let r = json(&o);
    for k in ["status", "witnesses", "seeds", "bounds"] {
        assert!(r.get(k).is_some(), "missing {k}");
    }
    for k in ["position", "assertion", "bindings", "caveats"] {
        assert!(r["witnesses"][0].get(k).is_some(), "witness missing {k}");
    }
    assert_eq!(r["bounds"]["max_steps"], 500);
}

#[test]
fn usage_errors_exit_3() {
    let w = Workspace::new();
    let missing = w.check("nope.loo", "safe_clients.loo", "@safe_thief.drv", "safe.cmail", &[]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.loo"));

    let driver = w.check("safe_v1.loo", "safe_clients.loo", "x := := y", "safe.cmail", &[]);
    assert_eq!(driver.status.code(), Some(3));

    std::fs::write(w.path("broken.cmail"), "assert a: forall x. ").unwrap();
    let spec = w.check("safe_v1.loo", "safe_clients.loo", "@safe_thief.drv", "broken.cmail", &[]);
    assert_eq!(spec.status.code(), Some(3));

    let overlap = w.check("safe_v1.loo", "safe_v2.loo", "@safe_thief.drv", "safe.cmail", &[]);
    assert_eq!(overlap.status.code(), Some(3));

    let flag = w.cmd().args(["check", "--bogus"]).output().unwrap();
    assert_eq!(flag.status.code(), Some(3));

    let env = w.cmd().env("CHAINMAIL_SEED", "many").args(["props", "--trials", "1"]).output().unwrap();
    assert_eq!(env.status.code(), Some(3));

    let help = w.cmd().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn seed_comes_from_flag_then_environment() {
    let w = Workspace::new();
    let run = |env: Option<&str>, flag: &[&str]| {
        let mut c = w.cmd();
        if let Some(e) = env {
            c.env("CHAINMAIL_SEED", e);
        }
        c.args(["check", "--internal", "dao.loo", "--driver", "@dao_honest.drv", "--spec", "dao.cmail"])
            .args(flag)
            .output()
            .unwrap()
    };
    assert_eq!(json(&run(None, &[]))["seeds"]["check"], 0);
    assert_eq!(json(&run(Some("42"), &[]))["seeds"]["check"], 42);
    assert_eq!(json(&run(Some("42"), &["--seed", "5"]))["seeds"]["check"], 5);
}

#[test]
fn text_report_never_claims_validity() {
    let w = Workspace::new();
    let o = w.check("token.loo", "token_clients.loo", "@token_honest.drv", "token.cmail", &["--format", "text"]);
    let text = stdout(&o);
    assert!(text.contains("no violation found on this run"), "{text}");
    assert!(!text.to_lowercase().contains("valid"), "{text}");
}

#[test]
fn dump_trace_writes_one_line_per_position() {
    let w = Workspace::new();
    let o = w
        .cmd()
        .args([
            "run",
            "--internal",
            "bank_v2.loo",
            "--external",
            "bank_clients.loo",
            "--driver",
            "@bank_v2_transfer.drv",
        ])
        .args(["--dump-trace", "trace.jsonl"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("terminated"));
    let lines: Vec<serde_json::Value> = std::fs::read_to_string(w.path("trace.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let tail = lines.last().unwrap();
    assert_eq!(tail["end"], "terminated");
    assert_eq!(tail["positions"].as_u64().unwrap() as usize, lines.len() - 1);
    assert_eq!(lines[0]["position"], 0);
}

#[test]
fn run_from_a_configuration_file() {
    let w = Workspace::new();
    let o = w
        .cmd()
        .args(["run", "--internal", "bank_v2.loo", "--external", "bank_clients.loo", "--start", "bank_sigma4.json"])
        .args(["--format", "json"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let cfg = json(&o);
    assert_eq!(cfg["heap"]["13"]["fields"]["balance"]["nat"], 420);
}

#[test]
fn stuck_run_exits_1() {
    let w = Workspace::new();
    let o = w
        .cmd()
        .args(["run", "--internal", "dom.loo", "--external", "dom_clients.loo", "--driver", "@dom_sneaky.drv"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("getNode"));
}

#[test]
fn props_subcommand_reports_each_suite() {
    let w = Workspace::new();
    let o = w.cmd().args(["props", "--trials", "10", "--seed", "3"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("modus ponens") && text.contains("seed 3"));
}

#[test]
fn corpus_subcommands() {
    let w = Workspace::new();
    let list = w.cmd().args(["corpus", "list"]).output().unwrap();
    assert!(stdout(&list).contains("safe-v2-lockpick"));
    let check = w.cmd().args(["corpus", "check", "dao-drain"]).output().unwrap();
    assert_eq!(check.status.code(), Some(1));
    let unknown = w.cmd().args(["corpus", "check", "nothing"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(3));
    let out = w.path("exported");
    let export = w.cmd().args(["corpus", "export"]).arg(&out).output().unwrap();
    assert_eq!(export.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(Path::new(&out).join("dom.cmail")).unwrap(), file("dom.cmail"));
}
