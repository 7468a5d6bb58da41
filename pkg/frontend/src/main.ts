// Browser entry point: wire the socket, keyboard, mouse camera controls,
// the precision slider, and the redraw loop together.

import { LiveClient } from "./client.js";
import { panCamera, zoomCamera } from "./geometry.js";
import { handleKey } from "./keys.js";
import { render } from "./renderer.js";
import { ViewModel } from "./viewmodel.js";

const PRECISION_STOPS = [0.1, 1, 10, 100];

function wsUrl(): string {
  const params = new URLSearchParams(location.search);
  const given = params.get("url");
  if (given) return given;
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/ws`;
}

function main() {
  const canvas = document.getElementById("scene") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const banner = document.getElementById("banner")!;
  const status = document.getElementById("status")!;
  const slider = document.getElementById("precision") as HTMLInputElement;
  const sliderValue = document.getElementById("precision-value")!;

  const vm = new ViewModel();
  let needsDraw = true;

  const params = new URLSearchParams(location.search);
  const reconnectMs = Number(params.get("reconnect") ?? "500");
  const client = new LiveClient({
    url: wsUrl(),
    reconnectMs: Number.isFinite(reconnectMs) ? reconnectMs : 500,
    onMessage: (msg) => {
      if (vm.apply(msg)) needsDraw = true;
      banner.textContent = vm.banner ?? "";
      banner.style.display = vm.banner ? "block" : "none";
    },
    onStatus: (s) => {
      vm.status = s;
      status.textContent = s;
      status.className = s;
    },
  });

  window.addEventListener("keydown", (ev) => {
    if (ev.target === slider) return;
    const cmd = handleKey(ev.key, vm);
    if (cmd !== null) {
      client.send(cmd);
      ev.preventDefault();
    }
    if (ev.key === "g") {
      vm.toggles.groundTruth = !vm.toggles.groundTruth;
      needsDraw = true;
    }
    if (ev.key === "l") {
      vm.toggles.factorLabels = !vm.toggles.factorLabels;
      needsDraw = true;
    }
  });

  slider.addEventListener("change", () => {
    const multiplier = PRECISION_STOPS[Number(slider.value)];
    sliderValue.textContent = `x${multiplier}`;
    client.send({ type: "scale_precision", multiplier });
  });
  slider.addEventListener("input", () => {
    sliderValue.textContent = `x${PRECISION_STOPS[Number(slider.value)]}`;
  });

  // drag to pan, wheel to zoom
  let dragging = false;
  let lastX = 0;
  let lastY = 0;
  canvas.addEventListener("mousedown", (ev) => {
    dragging = true;
    lastX = ev.clientX;
    lastY = ev.clientY;
  });
  window.addEventListener("mouseup", () => {
    dragging = false;
  });
  window.addEventListener("mousemove", (ev) => {
    if (!dragging) return;
    vm.camera = panCamera(vm.camera, ev.clientX - lastX, ev.clientY - lastY, canvas.width, canvas.height);
    lastX = ev.clientX;
    lastY = ev.clientY;
    needsDraw = true;
  });
  canvas.addEventListener("wheel", (ev) => {
    vm.camera = zoomCamera(vm.camera, ev.deltaY < 0 ? 1.15 : 1 / 1.15);
    needsDraw = true;
    ev.preventDefault();
  });

  function fit() {
    canvas.width = canvas.clientWidth;
    canvas.height = canvas.clientHeight;
    needsDraw = true;
  }
  window.addEventListener("resize", fit);
  fit();

  function loop() {
    if (needsDraw) {
      render(ctx, vm, canvas.width, canvas.height);
      needsDraw = false;
    }
    requestAnimationFrame(loop);
  }
  loop();

  window.addEventListener("beforeunload", () => client.close());
}

window.addEventListener("DOMContentLoaded", main);
