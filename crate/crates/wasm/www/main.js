import init, { approximation_heatmap, product_modulus_field, torus_orbit } from "./pkg/eulerprod_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

// blue (small) to red (large)
function color(v) {
  const x = Math.max(0, Math.min(1, v));
  return `rgb(${Math.round(255 * x)}, ${Math.round(80 * (1 - Math.abs(2 * x - 1)))}, ${Math.round(255 * (1 - x))})`;
}

function runApproximation() {
  const r = num("a-r");
  const data = approximation_heatmap(num("a-re"), num("a-im"), r, num("a-eps"), num("a-pmax"));
  const ctx = $("a-canvas").getContext("2d");
  ctx.clearRect(0, 0, 360, 360);
  if (data.length === 0) {
    $("a-out").textContent = "rejected: check 0 < r < 1/4";
    return;
  }
  const [err, steps, primes, largest] = data;
  $("a-out").textContent =
    `max error ${err.toExponential(3)}, ${steps} greedy steps, ${primes} primes up to ${largest}`;
  const scale = 170 / r;
  for (let k = 4; k < data.length; k += 3) {
    ctx.fillStyle = color(data[k + 2] / err);
    ctx.fillRect(180 + data[k] * scale - 3, 180 - data[k + 1] * scale - 3, 6, 6);
  }
}

function runField() {
  const nx = 60, ny = 120;
  const f = product_modulus_field(num("f-n"), 0.5, 1.0, num("f-t0"), num("f-t1"), nx, ny);
  const logs = f.map((v) => Math.log(v));
  const lo = Math.min(...logs.filter(Number.isFinite));
  const hi = Math.max(...logs.filter(Number.isFinite));
  const ctx = $("f-canvas").getContext("2d");
  const w = 240 / nx, h = 480 / ny;
  for (let j = 0; j < ny; j++) {
    for (let i = 0; i < nx; i++) {
      ctx.fillStyle = color((logs[j * nx + i] - lo) / (hi - lo));
      ctx.fillRect(i * w, 480 - (j + 1) * h, w + 1, h + 1);
    }
  }
  $("f-out").textContent = `sigma in [1/2, 1], log|F| from ${lo.toFixed(2)} to ${hi.toFixed(2)}`;
}

function runOrbit() {
  const data = torus_orbit(num("o-t"), num("o-n"), 50);
  const ctx = $("o-canvas").getContext("2d");
  ctx.clearRect(0, 0, 360, 360);
  ctx.fillStyle = "rgba(20, 60, 160, 0.5)";
  for (let k = 2; k < data.length; k += 2) {
    ctx.fillRect(data[k] * 360, 360 - data[k + 1] * 360, 1.5, 1.5);
  }
  $("o-out").textContent =
    `star discrepancy: coordinates ${data[0].toFixed(4)}, pair ${data[1].toFixed(4)}`;
}

await init();
$("a-run").onclick = runApproximation;
$("f-run").onclick = runField;
$("o-run").onclick = runOrbit;
runApproximation();
runField();
runOrbit();
