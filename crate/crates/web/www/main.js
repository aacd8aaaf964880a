import init, { spikeRay, solveFractional, mountainPassProfile } from "./pkg/graphpq_web.js";

const COLORS = ["#1f5fa8", "#c0392b", "#2e8b57"];

function formValues(form) {
  const out = {};
  for (const input of form.querySelectorAll("input")) {
    out[input.name] = input.step && input.step !== "1" ? parseFloat(input.value) : parseInt(input.value, 10);
  }
  return out;
}

function call(op, request, outId) {
  const out = document.getElementById(outId);
  const response = JSON.parse(op(JSON.stringify(request)));
  if (response.error) {
    out.className = "error";
    out.textContent = response.error;
    return null;
  }
  out.className = "";
  return response;
}

// series: [{x: [...], y: [...], dashed, label}]
function plot(canvasId, series, marks = []) {
  const canvas = document.getElementById(canvasId);
  const ctx = canvas.getContext("2d");
  const pad = 48;
  const w = canvas.width - 2 * pad;
  const h = canvas.height - 2 * pad;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const xs = series.flatMap((s) => s.x);
  const ys = series.flatMap((s) => s.y.filter((v) => v !== null && Number.isFinite(v)));
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys, 0), Math.max(...ys, 0)];
  if (y1 === y0) y1 = y0 + 1;
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * w;
  const py = (y) => pad + h - ((y - y0) / (y1 - y0)) * h;

  ctx.strokeStyle = "#999";
  ctx.lineWidth = 1;
  ctx.setLineDash([]);
  ctx.beginPath();
  ctx.moveTo(pad, py(0));
  ctx.lineTo(pad + w, py(0));
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, pad + h);
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.font = "12px system-ui";
  ctx.fillText(y1.toPrecision(3), 4, pad + 4);
  ctx.fillText(y0.toPrecision(3), 4, pad + h);
  ctx.fillText(x0.toPrecision(3), pad, pad + h + 16);
  ctx.fillText(x1.toPrecision(3), pad + w - 30, pad + h + 16);

  series.forEach((s, k) => {
    ctx.strokeStyle = COLORS[k % COLORS.length];
    ctx.lineWidth = 2;
    ctx.setLineDash(s.dashed ? [6, 4] : []);
    ctx.beginPath();
    let started = false;
    s.x.forEach((x, i) => {
      const y = s.y[i];
      if (y === null || !Number.isFinite(y) || (s.from !== undefined && x < s.from)) {
        started = false;
        return;
      }
      if (started) ctx.lineTo(px(x), py(y));
      else ctx.moveTo(px(x), py(y));
      started = true;
    });
    ctx.stroke();
    if (s.points) {
      ctx.fillStyle = ctx.strokeStyle;
      s.x.forEach((x, i) => ctx.fillRect(px(x) - 2, py(s.y[i]) - 2, 4, 4));
    }
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(s.label, pad + w - 160, pad + 14 + 16 * k);
  });
  ctx.setLineDash([]);
  for (const m of marks) {
    ctx.strokeStyle = "#888";
    ctx.beginPath();
    ctx.moveTo(pad, py(m.y));
    ctx.lineTo(pad + w, py(m.y));
    ctx.stroke();
    ctx.fillStyle = "#888";
    ctx.fillText(m.label, pad + 4, py(m.y) - 4);
  }
}

function runRay(event) {
  event?.preventDefault();
  const request = formValues(document.getElementById("ray-form"));
  request.samples = 241;
  const r = call(spikeRay, request, "ray-out");
  if (!r) return;
  plot("ray-plot", [
    { x: r.s, y: r.energy, label: "energy" },
    { x: r.s, y: r.upper_bound, dashed: true, from: r.bound_valid_from ?? 0, label: "endpoint upper bound" },
  ]);
  document.getElementById("ray-out").textContent =
    `spike vertex ${r.vertex}; rho = ${r.rho.toExponential(4)}, alpha = ${r.alpha.toExponential(4)}; ` +
    `endpoint amplitude s = ${r.endpoint_s}`;
}

function runFractional(event) {
  event?.preventDefault();
  const r = call(solveFractional, formValues(document.getElementById("frac-form")), "frac-out");
  if (!r) return;
  const index = r.ids.map((_, i) => i);
  plot("frac-plot", [
    { x: index, y: r.u, label: "u", points: true },
    { x: index, y: r.v, label: "v", points: true },
  ]);
  const bounds = r.bound_checks
    .map((b) => `${b.name}: ${b.holds === null ? "not applicable" : b.holds ? "holds" : "fails"}`)
    .join("\n");
  document.getElementById("frac-out").textContent =
    `energy ${r.energy.toPrecision(10)}, residual ${r.residual_sup.toExponential(2)}, ` +
    `${r.iterations} iterations, ${r.classification}\n${bounds}`;
}

function runMountainPass(event) {
  event?.preventDefault();
  const out = document.getElementById("mp-out");
  out.textContent = "running…";
  const request = formValues(document.getElementById("mp-form"));
  setTimeout(() => {
    const r = call(mountainPassProfile, request, "mp-out");
    if (!r) return;
    plot("mp-plot", [{ x: r.arclength, y: r.energy, label: "path energy", points: true }], [
      { y: r.saddle.energy, label: `saddle ${r.saddle.energy.toPrecision(6)}` },
    ]);
    const s = r.saddle;
    out.textContent =
      `${r.path_sweeps} path sweeps, ${r.refine_steps} refinement steps; saddle energy ${s.energy.toPrecision(10)}, ` +
      `residual ${s.residual_sup.toExponential(2)}, ${s.classification}; alpha = ${r.alpha.toExponential(3)}\n` +
      s.ids.map((id, i) => `${id}: u = ${s.u[i].toExponential(3)}, v = ${s.v[i].toFixed(6)}`).join("\n");
  }, 0);
}

init().then(() => {
  document.getElementById("status").textContent = "Ready.";
  document.getElementById("ray-form").addEventListener("submit", runRay);
  document.getElementById("frac-form").addEventListener("submit", runFractional);
  document.getElementById("mp-form").addEventListener("submit", runMountainPass);
  runRay();
  runFractional();
  runMountainPass();
});
