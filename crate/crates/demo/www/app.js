import init, { run, check, judge, examples } from "./pkg/chainmail_demo.js";

const $ = (id) => document.getElementById(id);
const fields = ["internal", "external", "driver", "spec"];
let trace = null;

function sources() {
  const s = Object.fromEntries(fields.map((f) => [f, $(f).value]));
  s.steps = Number($("steps").value) || 10000;
  return s;
}

function status(text, cls) {
  $("status").textContent = text;
  $("status").className = cls;
}

function attempt(f) {
  try {
    return f();
  } catch (e) {
    status(String(e), "error");
    return null;
  }
}

function describeFrame(cfg) {
  const top = cfg.stack[0];
  const self = top.vars.this ? `@${top.vars.this.addr}` : "?";
  return `${self}: ${top.contn || "(done)"}`;
}

function showPositions(witnessAt = new Set()) {
  const list = $("positions");
  list.replaceChildren();
  if (!trace) return;
  trace.positions.forEach((cfg, i) => {
    const li = document.createElement("li");
    li.textContent = describeFrame(cfg);
    if (witnessAt.has(i)) li.classList.add("witness");
    li.addEventListener("click", () => {
      list.querySelectorAll(".selected").forEach((n) => n.classList.remove("selected"));
      li.classList.add("selected");
      $("position").value = i;
      $("output").textContent = JSON.stringify(cfg, null, 2);
    });
    list.append(li);
  });
}

function doRun() {
  const s = sources();
  const out = attempt(() => JSON.parse(run(s.internal, s.external, s.driver, s.steps)));
  if (!out) return;
  trace = out;
  status(`${out.end} after ${out.steps} steps, ${out.positions.length} external positions`, "");
  showPositions();
  $("output").textContent = "";
}

function doCheck() {
  const s = sources();
  const report = attempt(() => JSON.parse(check(s.internal, s.external, s.driver, s.spec, s.steps)));
  if (!report) return;
  trace = attempt(() => JSON.parse(run(s.internal, s.external, s.driver, s.steps)));
  status(report.summary, report.status);
  showPositions(new Set(report.witnesses.map((w) => w.position)));
  $("output").textContent = JSON.stringify(report, null, 2);
}

function doEval() {
  const s = sources();
  const p = Number($("position").value) || 0;
  const j = attempt(() => JSON.parse(judge(s.internal, s.external, s.driver, p, $("assertion").value, s.steps)));
  if (!j) return;
  const verdict = j.withheld ? "withheld" : j.holds ? "holds" : "does not hold";
  status(`at position ${p}: ${verdict}`, j.withheld ? "withheld" : "");
  $("output").textContent = JSON.stringify(j, null, 2);
}

function load(ex) {
  fields.forEach((f) => ($(f).value = ex[f]));
  $("expected").textContent = `${ex.description} (expected: ${ex.expected.replaceAll("_", " ")})`;
  trace = null;
  showPositions();
  status("", "");
  $("output").textContent = "";
}

await init();
const all = JSON.parse(examples());
for (const ex of all) {
  const opt = document.createElement("option");
  opt.value = ex.name;
  opt.textContent = ex.name;
  $("example").append(opt);
}
$("example").addEventListener("change", (e) => load(all.find((x) => x.name === e.target.value)));
$("run").addEventListener("click", doRun);
$("check").addEventListener("click", doCheck);
$("eval").addEventListener("click", doEval);
load(all[0]);
