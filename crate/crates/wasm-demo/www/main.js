import init, { fidelity_curve, relaxation_profile, initial_layer_curve } from "./pkg/paraqsim_wasm_demo.js";

const COLORS = ["#1f77b4", "#ff7f0e"];

function plot(canvas, x, curves, { logY = false } = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  const tr = logY ? (v) => Math.log10(Math.max(v, 1e-300)) : (v) => v;
  const ys = curves.flatMap((c) => Array.from(c, tr)).filter(Number.isFinite);
  const [x0, x1] = [Math.min(...x), Math.max(...x)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  const px = (v) => pad + ((v - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (v) => h - pad - ((tr(v) - y0) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 14);
  ctx.fillText(x1.toPrecision(3), w - pad - 30, h - pad + 14);
  ctx.fillText((logY ? "1e" : "") + y1.toPrecision(3), 2, pad + 4);
  ctx.fillText((logY ? "1e" : "") + y0.toPrecision(3), 2, h - pad);

  curves.forEach((c, k) => {
    if (!c.length) return;
    ctx.strokeStyle = COLORS[k % COLORS.length];
    ctx.lineWidth = 2;
    ctx.beginPath();
    c.forEach((v, i) => (i ? ctx.lineTo(px(x[i]), py(v)) : ctx.moveTo(px(x[i]), py(v))));
    ctx.stroke();
  });
}

const $ = (id) => document.getElementById(id);
const val = (id) => {
  const v = parseFloat($(id).value);
  $(id + "-v").textContent = v;
  return v;
};

function guarded(outId, f) {
  try {
    f();
  } catch (e) {
    $(outId).textContent = "error: " + e;
  }
}

function drawFidelity() {
  guarded("fid-out", () => {
    const s = fidelity_curve(0.05, val("fid-smax"), 400);
    $("fid-out").textContent = `s = ${s.value.toFixed(3)}, F = ${Math.max(...s.a).toFixed(4)}`;
    plot($("fid-canvas"), s.x, [s.a]);
  });
}

function drawRelaxation() {
  guarded("rel-out", () => {
    const s = relaxation_profile(val("rel-eps"), val("rel-k"), val("rel-t"), 256);
    $("rel-out").textContent = s.value.toExponential(3);
    plot($("rel-canvas"), s.x, [s.a, s.b]);
  });
}

function drawLayer() {
  guarded("lay-out", () => {
    const eps = val("lay-eps"), k = val("lay-k");
    const s = initial_layer_curve(eps, k, 41);
    $("lay-out").textContent = `${s.value.toFixed(1)} (expected ${(-1 / (eps * eps * k)).toFixed(1)})`;
    plot($("lay-canvas"), s.x, [s.a, s.b], { logY: true });
  });
}

await init();
for (const id of ["fid-smax"]) $(id).addEventListener("input", drawFidelity);
for (const id of ["rel-eps", "rel-k", "rel-t"]) $(id).addEventListener("input", drawRelaxation);
for (const id of ["lay-eps", "lay-k"]) $(id).addEventListener("input", drawLayer);
drawFidelity();
drawRelaxation();
drawLayer();
