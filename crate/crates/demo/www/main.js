import init, { walkProfile, runTester, spectrum } from "./pkg/kcluster_demo.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

function spec() { return $("spec").value.trim(); }
function seed() { return BigInt($("seed").value || 0); }

function guard(out, f) {
  try {
    f();
  } catch (e) {
    out.innerHTML = "";
    const p = document.createElement("p");
    p.className = "err";
    p.textContent = String(e);
    out.append(p);
  }
}

// series: [{ label, color, ys }]; xs shared
function plot(canvas, xs, series, { logY = false } = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  ctx.clearRect(0, 0, w, h);
  const tf = (y) => (logY ? Math.log10(Math.max(y, 1e-12)) : y);
  const all = series.flatMap((s) => s.ys.filter((y) => y != null).map(tf));
  let lo = Math.min(...all), hi = Math.max(...all);
  if (hi - lo < 1e-12) { hi = lo + 1; }
  const x0 = xs[0], x1 = xs[xs.length - 1] || 1;
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const py = (y) => h - pad - ((tf(y) - lo) / (hi - lo)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  ctx.fillText((logY ? "1e" : "") + hi.toFixed(2), 2, pad + 4);
  ctx.fillText((logY ? "1e" : "") + lo.toFixed(2), 2, h - pad);
  ctx.fillText(String(x0), pad, h - pad + 14);
  ctx.fillText(String(x1), w - pad - 20, h - pad + 14);
  series.forEach((s, i) => {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    let started = false;
    s.ys.forEach((y, j) => {
      if (y == null) return;
      if (started) ctx.lineTo(px(xs[j]), py(y)); else { ctx.moveTo(px(xs[j]), py(y)); started = true; }
    });
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, w - pad - 160, pad + 14 + 14 * i);
  });
}

function runWalk() {
  guard($("walk-out"), () => {
    const r = JSON.parse(walkProfile(spec(), seed(), Number($("steps").value)));
    const xs = r.points.map((p) => p.t);
    const series = [
      { label: "||p_t||^2", color: COLORS[0], ys: r.points.map((p) => p.norm_sq) },
      { label: "mass in own part", color: COLORS[2], ys: r.points.map((p) => p.own_part_mass) },
    ];
    if (r.other_vertex != null) {
      series.push({ label: `dist^2 to walk from ${r.other_vertex}`, color: COLORS[1], ys: r.points.map((p) => p.distance_sq) });
    }
    plot($("walk-plot"), xs, series, { logY: true });
    const last = r.points[r.points.length - 1];
    $("walk-out").textContent =
      `n=${r.n}, d=${r.d}, ${r.parts} planted parts; at t=${last.t}: ||p||^2=${last.norm_sq.toExponential(3)}, ` +
      `own-part mass=${last.own_part_mass.toFixed(4)}` +
      (last.distance_sq != null ? `, dist^2=${last.distance_sq.toExponential(3)}` : "");
  });
}

// sample vertices on a circle, colored by true part; lines are similarity edges
function drawSimilarity(canvas, r) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const s = r.sample_vertices.length;
  const pos = r.sample_vertices.map((_, i) => {
    const a = (2 * Math.PI * i) / s;
    return [w / 2 + 0.4 * h * Math.cos(a), h / 2 + 0.4 * h * Math.sin(a)];
  });
  ctx.strokeStyle = "#bbb";
  for (const [i, j] of r.edges) {
    ctx.beginPath();
    ctx.moveTo(...pos[i]);
    ctx.lineTo(...pos[j]);
    ctx.stroke();
  }
  pos.forEach(([x, y], i) => {
    ctx.fillStyle = COLORS[r.sample_parts[i] % COLORS.length];
    ctx.beginPath();
    ctx.arc(x, y, 6, 0, 2 * Math.PI);
    ctx.fill();
  });
}

function runTest() {
  guard($("test-out"), () => {
    const t0 = performance.now();
    const r = JSON.parse(runTester(spec(), seed(), Number($("k").value), Number($("eps").value), Number($("phi").value)));
    const ms = performance.now() - t0;
    drawSimilarity($("test-plot"), r);
    $("test-out").textContent =
      `verdict: ${r.verdict}${r.reject_reason ? " (" + r.reject_reason + ")" : ""}\n` +
      `components: ${r.component_count ?? "-"} (true parts: ${r.true_parts})\n` +
      `queries: ${r.queries} of budget ${Math.round(r.query_budget)} on n=${r.n}\n` +
      `s=${r.params.s} ell=${r.params.ell} r=${r.params.r} batches=${r.params.batches} sigma=${r.params.sigma.toExponential(2)}\n` +
      `${ms.toFixed(0)} ms`;
  });
}

function runSpec() {
  guard($("spec-out"), () => {
    const r = JSON.parse(spectrum(spec(), seed()));
    const shown = r.eigenvalues.slice(0, 40);
    plot($("spec-plot"), shown.map((_, i) => i + 1), [{ label: "lambda_i", color: COLORS[3], ys: shown }]);
    const g = r.eigengap;
    $("spec-out").textContent =
      `n=${r.n}, zero multiplicity ${r.zero_multiplicity}\n` +
      `h=${g.h} parts, max outer conductance ${g.max_phi_out.toFixed(4)}\n` +
      `lambda_1..lambda_h <= 2 max phi_out: ${g.holds}\n` +
      `lambda_{h+1} / lambda_h = ${g.gap_ratio == null ? "-" : g.gap_ratio.toFixed(2)}`;
  });
}

await init();
document.querySelectorAll("button[data-spec]").forEach((b) =>
  b.addEventListener("click", () => { $("spec").value = b.dataset.spec; }));
$("run-walk").addEventListener("click", runWalk);
$("run-test").addEventListener("click", runTest);
$("run-spec").addEventListener("click", runSpec);
runWalk();
