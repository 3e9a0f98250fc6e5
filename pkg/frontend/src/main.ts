import { createApi } from "./api.js";
import { mountApp } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const baseUrl =
  params.get("api") ??
  (window as unknown as { MODSR_BASE_URL?: string }).MODSR_BASE_URL ??
  "http://127.0.0.1:8008";

mountApp(document.getElementById("app") as HTMLElement, createApi(baseUrl));
