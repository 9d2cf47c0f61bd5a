import init, { reachWindows, fieldGrid, regionMask, runExample1 } from "./pkg/koopreach_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function showError(el, e) {
  el.classList.add("err");
  el.textContent = String(e && e.message ? e.message : e);
}

// rows: [label, color, [[lo, hi], ...]] drawn on a shared [0, tMax] axis
function drawWindows(canvas, tMax, rows) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height;
  const left = 80, right = 15, rowH = 22;
  ctx.clearRect(0, 0, w, h);
  ctx.font = "12px system-ui, sans-serif";
  const x = (t) => left + (w - left - right) * (t / tMax);
  rows.forEach(([label, color, ivs], i) => {
    const y = 8 + i * rowH;
    ctx.fillStyle = "#333";
    ctx.fillText(label, 4, y + 13);
    ctx.fillStyle = "#eee";
    ctx.fillRect(left, y, w - left - right, rowH - 6);
    ctx.fillStyle = color;
    for (const [lo, hi] of ivs) ctx.fillRect(x(lo), y, Math.max(1, x(hi) - x(lo)), rowH - 6);
  });
  const yAxis = 8 + rows.length * rowH;
  ctx.fillStyle = "#333";
  for (let k = 0; k <= 10; k++) {
    const t = (tMax * k) / 10;
    ctx.fillRect(x(t), yAxis - 4, 1, 4);
    ctx.fillText(t.toFixed(1), x(t) - 8, yAxis + 10);
  }
}

function fmt(ivs) {
  return ivs.length ? ivs.map(([a, b]) => `[${a.toFixed(4)}, ${b.toFixed(4)}]`).join(" U ") : "empty";
}

function updateWindows() {
  const out = $("win-out");
  out.classList.remove("err");
  try {
    const tMax = num("w-t");
    const r = JSON.parse(reachWindows(num("w-re"), num("w-im"), num("w-lf"), num("w-lb"), num("w-af"), num("w-ab"), tMax));
    drawWindows($("win-canvas"), tMax, [
      ["magnitude", "#1f77b4", r.mag],
      ["phase", "#ff7f0e", r.phase],
      ["combined", "#2ca02c", r.combined],
    ]);
    out.textContent = `magnitude: ${fmt(r.mag)}\nphase:     ${fmt(r.phase)}\ncombined:  ${fmt(r.combined)}`;
  } catch (e) {
    showError(out, e);
  }
}

// diverging blue-white-red ramp on [0, 1]
function ramp(s) {
  const c = (a, b) => Math.round(a + (b - a) * Math.abs(s - 0.5) * 2);
  return s < 0.5 ? [c(255, 49), c(255, 54), c(255, 149)] : [c(255, 215), c(255, 48), c(255, 39)];
}

function drawField() {
  const canvas = $("field-canvas");
  const n = 160;
  const grid = fieldGrid(parseInt($("f-which").value, 10), n, n);
  const mask = $("f-regions").checked ? regionMask(n, n) : null;
  const finite = grid.filter(Number.isFinite).sort((a, b) => a - b);
  // clip to the 2nd and 98th percentiles so the singular set does not wash out the scale
  const lo = finite[Math.floor(finite.length * 0.02)], hi = finite[Math.floor(finite.length * 0.98)];
  const img = new ImageData(n, n);
  for (let i = 0; i < n * n; i++) {
    let rgb;
    if (mask && mask[i] === 1) rgb = [31, 119, 180];
    else if (mask && mask[i] === 2) rgb = [214, 39, 40];
    else if (!Number.isFinite(grid[i])) rgb = [170, 170, 170];
    else rgb = ramp(Math.min(1, Math.max(0, (grid[i] - lo) / (hi - lo))));
    img.data.set([...rgb, 255], 4 * i);
  }
  const tmp = new OffscreenCanvas(n, n);
  tmp.getContext("2d").putImageData(img, 0, 0);
  const ctx = canvas.getContext("2d");
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

function runPipeline(ev) {
  ev.preventDefault();
  const out = $("run-out");
  out.classList.remove("err");
  out.textContent = "running...";
  // yield so the status text paints before the synchronous run
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const r = JSON.parse(runExample1(parseInt($("r-seed").value, 10), parseInt($("r-traj").value, 10),
        parseInt($("r-deg").value, 10), parseInt($("r-n").value, 10), num("r-delta")));
      const secs = ((performance.now() - t0) / 1000).toFixed(2);
      const tMax = r.final_intervals.t_max;
      const rows = r.eigenpairs.map((p, i) => [`lambda${i + 1}`, "#1f77b4", p.interval]);
      rows.push(["reach set", "#2ca02c", r.final_intervals.intervals]);
      drawWindows($("run-canvas"), tMax, rows);
      const g = r.guarantee;
      const lines = [
        `verdict: ${r.verdict}   (${secs} s)`,
        ...r.eigenpairs.map((p, i) => `lambda${i + 1} = ${p.lambda[0].toFixed(5)} ${p.lambda[1] >= 0 ? "+" : "-"} ${Math.abs(p.lambda[1]).toFixed(5)}i   residual ${p.residual.toExponential(2)}`),
        `reach-time set: ${fmt(r.final_intervals.intervals)}`,
        `eps ${g.eps.toExponential(3)}   Delta ${g.delta_total.toFixed(5)}   confidence ${g.confidence}`,
        g.statement,
      ];
      out.textContent = lines.join("\n");
    } catch (e) {
      showError(out, e);
    }
  }, 20);
}

await init();
$("win-form").addEventListener("input", updateWindows);
$("f-which").addEventListener("change", drawField);
$("f-regions").addEventListener("change", drawField);
$("run-form").addEventListener("submit", runPipeline);
updateWindows();
drawField();
