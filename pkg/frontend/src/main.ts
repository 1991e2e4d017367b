import { ApiClient } from "./api.js";
import { DesignerPage } from "./designer.js";
import { MonitorPage } from "./monitor.js";

const api = new ApiClient(
  (window as unknown as { GONOGO_API_BASE?: string }).GONOGO_API_BASE ?? "http://localhost:8000",
);

function activate(page: "designer" | "monitor"): void {
  document.querySelectorAll<HTMLElement>("[data-page]").forEach((el) => {
    el.hidden = el.dataset.page !== page;
  });
  document.querySelectorAll<HTMLButtonElement>("nav button").forEach((el) => {
    el.classList.toggle("active", el.dataset.target === page);
  });
}

const designerRoot = document.querySelector<HTMLElement>("[data-page='designer']");
const monitorRoot = document.querySelector<HTMLElement>("[data-page='monitor']");
if (!designerRoot || !monitorRoot) throw new Error("page containers missing");

const designer = new DesignerPage(api, designerRoot);
const monitor = new MonitorPage(api, monitorRoot);
designer.mount();
monitor.mount();

document.querySelectorAll<HTMLButtonElement>("nav button").forEach((el) => {
  el.addEventListener("click", () => activate(el.dataset.target as "designer" | "monitor"));
});
activate("designer");
