import init, { evolve_pc, pcc_histogram, tradeoff } from "./pkg/forge_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
}

function scale(lo, hi, a, b) {
  const span = hi - lo || 1;
  return (v) => a + ((v - lo) / span) * (b - a);
}

function plotSteps(canvas, points, xLabel, yLabel) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  axes(ctx, w, h, pad);
  if (points.length === 0) return;
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => p[1]);
  const sx = scale(0, Math.max(...xs, 1), pad, w - pad / 2);
  const sy = scale(0, Math.max(...ys, 1), h - pad, pad / 2);
  ctx.strokeStyle = "#2a6";
  ctx.beginPath();
  points.forEach(([x, y], i) => {
    if (i === 0) ctx.moveTo(sx(x), sy(y));
    else {
      ctx.lineTo(sx(x), sy(points[i - 1][1]));
      ctx.lineTo(sx(x), sy(y));
    }
  });
  ctx.stroke();
  ctx.fillStyle = "#333";
  ctx.fillText(xLabel, w / 2, h - 8);
  ctx.fillText(yLabel, 4, 12);
}

function plotBars(canvas, pairs) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  axes(ctx, w, h, pad);
  const ds = pairs.map((p) => p[0]);
  const lo = Math.min(...ds), hi = Math.max(...ds);
  // log counts so the tall zero bar does not hide the tails
  const top = Math.log10(Math.max(...pairs.map((p) => p[1])) + 1);
  const sx = scale(lo - 0.5, hi + 0.5, pad, w - pad / 2);
  const bw = Math.max(2, (w - 1.5 * pad) / (hi - lo + 1) - 2);
  for (const [d, c] of pairs) {
    const bh = (Math.log10(c + 1) / top) * (h - 1.5 * pad);
    ctx.fillStyle = d === 0 ? "#999" : "#c63";
    ctx.fillRect(sx(d) - bw / 2, h - pad - bh, bw, bh);
    ctx.fillStyle = "#333";
    ctx.fillText(String(d), sx(d) - 4, h - pad + 12);
  }
  ctx.fillText("D (log count)", 4, 12);
}

function plotScatter(canvas, points) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  axes(ctx, w, h, pad);
  const sx = scale(0, Math.max(...points.map((p) => p.area), 1), pad, w - pad / 2);
  const sy = scale(0, Math.max(...points.map((p) => p.mae), 0.1), h - pad, pad / 2);
  for (const p of points) {
    ctx.fillStyle = p.pareto_optimal ? "#26c" : "#bbb";
    ctx.beginPath();
    ctx.arc(sx(p.area), sy(p.mae), 4, 0, 2 * Math.PI);
    ctx.fill();
  }
  ctx.fillStyle = "#333";
  ctx.fillText("area", w / 2, h - 8);
  ctx.fillText("mean absolute error", 4, 12);
}

function guarded(outId, f) {
  return () => {
    const out = $(outId);
    out.className = "";
    out.textContent = "working...";
    // let the status paint before the synchronous wasm call
    setTimeout(() => {
      try {
        f(out);
      } catch (e) {
        out.className = "err";
        out.textContent = String(e);
      }
    }, 10);
  };
}

await init();

$("ev-run").onclick = guarded("ev-out", (out) => {
  const r = JSON.parse(evolve_pc(num("ev-n"), $("ev-metric").value, num("ev-tau"), num("ev-iters"), num("ev-seed")));
  out.textContent = `area ${r.area} (exact ${r.exact_area}, one-bit truncation ${r.truncated_area} at mae ${r.truncated_mae}); ` +
    `mae ${r.mae}, wcae ${r.wcae} after ${r.iterations} iterations`;
  plotSteps($("ev-plot"), [[0, r.exact_area], ...r.improvements, [r.iterations, r.area]], "iteration", "area");
  $("ev-verilog").textContent = r.verilog;
});

$("h-run").onclick = guarded("h-out", (out) => {
  const r = JSON.parse(pcc_histogram(num("h-pos"), num("h-neg"), num("h-cpos"), num("h-cneg"), num("h-samples"), 7));
  out.textContent = `mde ${r.mde.toFixed(4)}, wcde ${r.wcde}, decisions flipped ${(100 * r.flip_fraction).toFixed(2)}%, ` +
    `area ${r.area}, ${r.sample_count} ${r.exhaustive ? "vectors (exhaustive)" : "random samples"}`;
  plotBars($("h-plot"), r.histogram);
});

$("t-run").onclick = guarded("t-out", (out) => {
  const pts = JSON.parse(tradeoff(num("t-n"), num("t-points"), num("t-iters"), 42));
  out.textContent = `${pts.length} designs, ${pts.filter((p) => p.pareto_optimal).length} Pareto-optimal`;
  plotScatter($("t-plot"), pts);
});
