import init, {
  toy_susceptible_field,
  toy_cohort_errors,
  foi_curve,
  prevalence_by_age,
} from "./pkg/serocohort_web.js";

const $ = (id) => document.getElementById(id);
const err = (e) => { $("err").textContent = e ? String(e.message ?? e) : ""; };

function heatmap(canvas, values, nt, na) {
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(nt, na);
  for (let j = 0; j < na; j++) {
    for (let i = 0; i < nt; i++) {
      const v = Math.round(255 * values[j * nt + i]);
      const o = 4 * ((na - 1 - j) * nt + i);
      img.data[o] = v; img.data[o + 1] = v; img.data[o + 2] = 255; img.data[o + 3] = 255;
    }
  }
  const tmp = new OffscreenCanvas(nt, na);
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

function plot(canvas, xs, ys, { dots = false, guide = null } = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const pad = 30;
  const all = guide ? ys.concat(guide) : ys;
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...all), Math.max(...all)];
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  const px = (x) => pad + (w - 2 * pad) * (x - x0) / (x1 - x0 || 1);
  const py = (y) => h - pad - (h - 2 * pad) * (y - y0) / (y1 - y0);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.fillText(y1.toPrecision(3), 2, pad);
  ctx.fillText(y0.toPrecision(3), 2, h - pad);
  const line = (vals, dash) => {
    ctx.setLineDash(dash);
    ctx.beginPath();
    vals.forEach((y, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, px(xs[i]), py(y)));
    ctx.stroke();
  };
  ctx.strokeStyle = "#1565c0";
  line(ys, []);
  if (dots) ys.forEach((y, i) => ctx.fillRect(px(xs[i]) - 2, py(y) - 2, 4, 4));
  if (guide) { ctx.strokeStyle = "#888"; line(guide, [4, 4]); }
  ctx.setLineDash([]);
}

function drawField() {
  const g = parseFloat($("q-gamma").value);
  $("q-gamma-v").textContent = g.toFixed(2);
  try {
    heatmap($("q-canvas"), toy_susceptible_field(g, 0, 6, 0.5, 300, 80), 300, 80);
    err();
  } catch (e) { err(e); }
}

function drawCohorts() {
  try {
    const e = Array.from(toy_cohort_errors(parseFloat($("c-gamma").value), parseInt($("c-box").value), 8));
    const ks = e.map((_, k) => k);
    const ys = e.map((v) => Math.log2(Math.max(v, 1e-300)));
    plot($("c-canvas"), ks, ys, { dots: true, guide: ks.map((k) => ys[0] - k) });
    err();
  } catch (x) { err(x); }
}

function drawFoi() {
  try {
    const alphas = new Float64Array($("f-alpha").value.split(",").map(Number));
    const [g1, g2, g3, age] = ["f-g1", "f-g2", "f-g3", "f-age"].map((id) => parseFloat($(id).value));
    const n = 400;
    const lam = Array.from(foi_curve(alphas, g1, g2, g3, age, 2000, 2010, n));
    plot($("f-canvas"), lam.map((_, i) => 2000 + 10 * i / (n - 1)), lam);
    const prev = Array.from(prevalence_by_age(alphas, g1, g2, g3, 2004, 20));
    plot($("p-canvas"), prev.map((_, a) => a + 0.5), prev, { dots: true });
    err();
  } catch (e) { err(e); }
}

await init();
$("q-gamma").addEventListener("input", drawField);
$("c-run").addEventListener("click", drawCohorts);
$("f-run").addEventListener("click", drawFoi);
drawField();
drawCohorts();
drawFoi();
