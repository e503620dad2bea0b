import { PortalClient } from "./api";
import { createApp } from "./app";
import "./style.css";

const base = (globalThis as { RAGMARK_API_BASE?: string }).RAGMARK_API_BASE ?? "";
const app = createApp(document.getElementById("app")!, new PortalClient(base));

window.addEventListener("hashchange", () => {
  void app.navigate(window.location.hash);
});
void app.navigate(window.location.hash);
