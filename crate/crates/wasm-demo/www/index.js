// Built by `wasm-pack build --target web --out-dir www/pkg` from the crate root.
import init, { boundsCurve, simulateTimeline, skiRentalRatios } from "./pkg/cachelab_wasm.js";

const $ = (id) => document.getElementById(id);

function plot(canvas, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  const pts = series.flatMap((s) => s.points).filter((p) => Number.isFinite(p[1]));
  if (pts.length === 0) return;
  const fx = opts.logX ? Math.log10 : (x) => x;
  const xs = pts.map((p) => fx(p[0]));
  const ys = pts.map((p) => p[1]);
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const y0 = Math.min(0, ...ys), y1 = Math.max(...ys) * 1.05 || 1;
  const sx = (x) => pad + ((fx(x) - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0 || 1)) * (h - 2 * pad);

  ctx.strokeStyle = "#aaa";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  for (let i = 0; i <= 4; i++) {
    const y = y0 + ((y1 - y0) * i) / 4;
    ctx.fillText(y.toFixed(2), 2, sy(y) + 4);
  }
  ctx.fillText(opts.xLabel ?? "", w / 2, h - 8);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dash ?? []);
    ctx.beginPath();
    let started = false;
    for (const [x, y] of s.points) {
      if (!Number.isFinite(y)) { started = false; continue; }
      if (started) ctx.lineTo(sx(x), sy(y)); else ctx.moveTo(sx(x), sy(y));
      started = true;
    }
    ctx.stroke();
  }
  ctx.setLineDash([]);
  for (const m of opts.marks ?? []) {
    ctx.strokeStyle = "#ccc";
    ctx.beginPath();
    ctx.moveTo(sx(m.x), pad / 2);
    ctx.lineTo(sx(m.x), h - pad);
    ctx.stroke();
    ctx.fillText(m.label, sx(m.x) + 3, pad / 2 + 10);
  }
}

function guard(msgEl, f) {
  try {
    msgEl.textContent = "";
    f();
  } catch (e) {
    msgEl.textContent = String(e);
  }
}

function drawBounds() {
  guard($("b-msg"), () => {
    const k = Number($("b-k").value);
    const res = JSON.parse(boundsCurve($("b-problem").value, $("b-setting").value, k, 1 / (8 * k * k), 4, 80, Number($("b-n").value)));
    const pick = (key) => res.points.map((p) => [p.lambda, p[key] ?? NaN]);
    plot($("b-canvas"), [
      { color: "#c33", points: pick("lower") },
      { color: "#36c", points: pick("upper") },
    ], {
      logX: true,
      xLabel: "λ (log scale)",
      marks: [{ x: 1 / (k * k), label: "1/k²" }, { x: 1 / k, label: "1/k" }],
    });
  });
}

function drawTimeline() {
  guard($("t-msg"), () => {
    const res = JSON.parse(simulateTimeline(
      $("t-trace").value, $("t-policy").value, Number($("t-k").value),
      $("t-lambda").value, $("t-n").value, Number($("t-seed").value),
    ));
    const l = res.ledger;
    $("t-summary").textContent =
      `${res.policy}: total ${l.total} (retrieval ${l.retrieval}, rental ${l.rental}, zapping ${l.zapping})` +
      (res.opt ? `, OPT ${res.opt}` : ", OPT not computed (instance too large)");
    plot($("t-canvas"), [
      { color: "#36c", points: res.steps.map((s) => [s.time, s.cumulative]) },
    ], { xLabel: "step" });
    const rows = res.steps.map((s) =>
      `<tr><td>${s.time}</td><td>${s.request ?? "tick"}</td><td>${s.evict.join(" ")}</td>` +
      `<td>${s.zap.join(" ")}</td><td>${s.resident.join(" ")}</td><td>${s.step_cost}</td></tr>`);
    $("t-table").innerHTML =
      "<tr><th>t</th><th>event</th><th>evict</th><th>zap</th><th>cache after</th><th>cost</th></tr>" + rows.join("");
  });
}

function drawSki() {
  guard($("s-msg"), () => {
    const res = JSON.parse(skiRentalRatios(Number($("s-b").value), Number($("s-max").value)));
    const e = res.e_over_e_minus_1;
    plot($("s-canvas"), [
      { color: "#c33", points: res.seasons.map((s) => [s.season, s.deterministic]) },
      { color: "#36c", points: res.seasons.map((s) => [s.season, s.randomized]) },
      { color: "#999", dash: [4, 4], points: res.seasons.map((s) => [s.season, e]) },
    ], { xLabel: "season length (days)" });
  });
}

await init();
for (const id of ["b-problem", "b-setting", "b-k", "b-n"]) $(id).addEventListener("input", drawBounds);
for (const id of ["s-b", "s-max"]) $(id).addEventListener("input", drawSki);
$("t-run").addEventListener("click", drawTimeline);
drawBounds();
drawTimeline();
drawSki();
