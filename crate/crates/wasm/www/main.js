import init, { scenarios, combos, simulate, cluster, selectK } from "./pkg/epiclust_wasm.js";

const PALETTE = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];
const $ = (id) => document.getElementById(id);

function status(text, error = false) {
  $("status").textContent = text;
  $("status").className = error ? "error" : "";
}

function fillSelect(el, values, selected) {
  el.replaceChildren(...values.map((v) => new Option(v, v, false, v === selected)));
}

function params() {
  return {
    scenario: $("scenario").value,
    seed: Math.max(0, parseInt($("seed").value, 10) || 0),
    combo: $("combo").value,
    method: $("method").value,
    k: Math.max(0, parseInt($("k").value, 10) || 0),
  };
}

function frame(ctx, xs, ys, pad = 30) {
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const w = ctx.canvas.width - 2 * pad;
  const h = ctx.canvas.height - 2 * pad;
  const sx = (x) => pad + (x1 > x0 ? (x - x0) / (x1 - x0) : 0.5) * w;
  const sy = (y) => pad + h - (y1 > y0 ? (y - y0) / (y1 - y0) : 0.5) * h;
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w, h);
  return { sx, sy };
}

function drawCurves(sim, groups) {
  const ctx = $("curves").getContext("2d");
  const { sx, sy } = frame(ctx, sim.grid, sim.curves.flat());
  ctx.globalAlpha = 0.6;
  sim.curves.forEach((c, i) => {
    ctx.strokeStyle = PALETTE[groups[i] % PALETTE.length];
    ctx.beginPath();
    c.forEach((v, j) => (j ? ctx.lineTo : ctx.moveTo).call(ctx, sx(sim.grid[j]), sy(v)));
    ctx.stroke();
  });
  ctx.globalAlpha = 1;
}

function drawFeatures(res) {
  const ctx = $("features").getContext("2d");
  const x = res.features.map((r) => r[0]);
  const y = res.features.map((r) => r[1] ?? 0);
  const { sx, sy } = frame(ctx, x, y);
  res.assign.forEach((g, i) => {
    ctx.fillStyle = PALETTE[g % PALETTE.length];
    ctx.beginPath();
    ctx.arc(sx(x[i]), sy(y[i]), 3, 0, 2 * Math.PI);
    ctx.fill();
  });
  ctx.fillStyle = "#333";
  ctx.fillText(res.columns[0], ctx.canvas.width / 2, ctx.canvas.height - 8);
  ctx.fillText(res.columns[1] ?? "", 4, 18);
}

function table(rows) {
  const html = rows.map((r) => `<tr>${r.map((c) => `<td>${c}</td>`).join("")}</tr>`).join("");
  $("table").innerHTML = `<table>${html}</table>`;
}

function guard(fn) {
  return () => {
    try {
      fn();
    } catch (e) {
      status(String(e), true);
    }
  };
}

const onSimulate = guard(() => {
  const p = params();
  const sim = JSON.parse(simulate(p.scenario, p.seed));
  drawCurves(sim, sim.labels);
  $("features").getContext("2d").clearRect(0, 0, 360, 360);
  status(`${sim.curves.length} curves on ${sim.grid.length} points, coloured by true group`);
  table([]);
});

const onCluster = guard(() => {
  const p = params();
  const res = JSON.parse(cluster(p.scenario, p.seed, p.combo, p.method, p.k));
  drawCurves(JSON.parse(simulate(p.scenario, p.seed)), res.assign);
  drawFeatures(res);
  status(`${res.config} with k = ${res.k}`);
  const f = (v) => v.toFixed(3);
  table([
    ["purity", "F", "pair F", "RI"].map((h) => `<b>${h}</b>`),
    [f(res.purity), f(res.fmeasure), f(res.pairwise_f), f(res.rand)],
  ]);
});

const onSelectK = guard(() => {
  const p = params();
  const res = JSON.parse(selectK(p.scenario, p.seed, p.combo, p.method));
  status(`${res.config}: silhouette picks k = ${res.chosen}`);
  table([
    ["k", ...res.candidates].map((h) => `<b>${h}</b>`),
    ["silhouette", ...res.silhouettes.map((s) => (s === null ? "NA" : s.toFixed(3)))],
  ]);
});

await init();
fillSelect($("scenario"), JSON.parse(scenarios()), "S 1-4");
fillSelect($("combo"), JSON.parse(combos()), "_.EIHI");
$("simulate").addEventListener("click", onSimulate);
$("cluster").addEventListener("click", onCluster);
$("selectk").addEventListener("click", onSelectK);
onSimulate();
