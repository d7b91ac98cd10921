import init, { space_time, survival, rates } from "./pkg/cpde_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function params() {
  return {
    n: num("n"),
    lambda: num("lambda"),
    v: num("v"),
    p: num("p"),
    horizon: num("horizon"),
    initial: $("initial").value.trim(),
    seed: BigInt(Math.max(0, Math.floor(num("seed")))),
    replicas: num("replicas"),
  };
}

function show(el, fn) {
  try {
    el.classList.remove("error");
    el.textContent = fn();
  } catch (e) {
    el.classList.add("error");
    el.textContent = String(e.message ?? e);
  }
}

function updateRates() {
  const q = params();
  show($("rates"), () => {
    const [beta, hat, delta] = rates(q.lambda, q.v, q.p, 1.649);
    const h = Number.isFinite(hat) ? hat.toFixed(3) : "none";
    return `beta = ${beta.toFixed(4)}   lambda_hat = ${h}   delta(T = 1/v) = ${delta.toFixed(4)}`;
  });
}

function draw() {
  const q = params();
  const rows = 300;
  const canvas = $("picture");
  show($("survival"), () => {
    const px = space_time(q.n, q.lambda, q.v, q.p, q.horizon, rows, q.initial, q.seed);
    canvas.width = 2 * q.n + 4;
    canvas.height = rows;
    const ctx = canvas.getContext("2d");
    const img = ctx.createImageData(canvas.width, rows);
    for (let r = 0; r < rows; r++) {
      for (let x = 0; x < canvas.width; x++) {
        let rgb = [255, 255, 255];
        if (x < q.n && px[r * q.n + x]) rgb = [200, 30, 30];
        const e = x - q.n - 4;
        if (e >= 0 && px[(rows + r) * q.n + e]) rgb = [90, 90, 90];
        const i = 4 * (r * canvas.width + x);
        img.data.set([...rgb, 255], i);
      }
    }
    ctx.putImageData(img, 0, 0);
    return "";
  });
}

function estimate() {
  const q = params();
  show($("survival"), () => {
    const [s, lo, hi] = survival(q.n, q.lambda, q.v, q.p, q.horizon, q.initial, q.replicas, q.seed);
    return `P(alive at ${q.horizon}) = ${s.toFixed(3)}  95% CI [${lo.toFixed(3)}, ${hi.toFixed(3)}]`;
  });
}

await init();
for (const id of ["lambda", "v", "p"]) $(id).addEventListener("input", updateRates);
$("run").addEventListener("click", draw);
$("estimate").addEventListener("click", estimate);
updateRates();
draw();
