import init, { feasibility_region, benchmark_feasibility, simulate_benchmark } from "./pkg/cmrac_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function fail(el, err) {
  el.className = "error";
  el.textContent = String(err);
}

function drawRegion() {
  const a = num("r-alpha");
  const b = num("r-beta");
  $("r-alpha-v").textContent = a.toFixed(2);
  $("r-beta-v").textContent = b.toFixed(2);
  try {
    $("region").innerHTML = feasibility_region(a, b, 12, 6, 120);
  } catch (e) {
    fail($("region"), e);
  }
}

function analyze() {
  const out = $("f-out");
  out.className = "";
  try {
    const r = JSON.parse(benchmark_feasibility(num("f-u"), num("f-x"), num("f-d")));
    $("f-region").innerHTML = r.region_svg;
    delete r.region_svg;
    out.textContent = JSON.stringify(r, null, 2);
  } catch (e) {
    $("f-region").innerHTML = "";
    fail(out, e);
  }
}

function simulate() {
  const out = $("s-out");
  out.className = "";
  out.textContent = "running...";
  // let the status text paint before the blocking run
  setTimeout(() => {
    try {
      const r = JSON.parse(
        simulate_benchmark($("s-law").value, num("s-u"), num("s-x"), num("s-d"), num("s-t"), $("s-override").checked),
      );
      $("s-plots").innerHTML = r.x_svg + r.u_svg + r.e_svg;
      delete r.x_svg;
      delete r.u_svg;
      delete r.e_svg;
      out.textContent = JSON.stringify(r, null, 2);
    } catch (e) {
      $("s-plots").innerHTML = "";
      fail(out, e);
    }
  }, 10);
}

await init();
$("r-alpha").addEventListener("input", drawRegion);
$("r-beta").addEventListener("input", drawRegion);
$("f-run").addEventListener("click", analyze);
$("s-run").addEventListener("click", simulate);
drawRegion();
analyze();
