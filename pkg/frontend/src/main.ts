import { ServiceClient } from "./api.js";
import { submitFeedback } from "./feedback.js";
import { renderPhasePanels } from "./panels.js";
import { SessionViewState } from "./state.js";
import { onEpsilonChange } from "./slider.js";

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function start(): Promise<void> {
  const state = new SessionViewState();
  const client = new ServiceClient();
  const panels = byId<HTMLElement>("panels");
  const slider = byId<HTMLInputElement>("epsilon");
  const sliderValue = byId<HTMLElement>("epsilon-value");
  const hourSelect = byId<HTMLSelectElement>("hour");

  const rerender = () => {
    if (state.status === "error") {
      panels.replaceChildren();
      const banner = document.createElement("div");
      banner.className = "error-banner";
      banner.textContent = state.errorMessage ?? "request failed";
      panels.append(banner);
      return;
    }
    if (state.result) {
      renderPhasePanels(panels, state.result, state, {
        onFeedback: (trackKey, action) => {
          void submitFeedback(state, client, trackKey, action, rerender);
        },
      });
    }
  };

  const refresh = async () => {
    try {
      state.setResult(
        await client.getRecommendations({ hour: state.hour, epsilon: state.epsilon }),
      );
    } catch (error) {
      state.setError(String(error));
    }
    rerender();
  };

  for (let hour = 0; hour < 24; hour += 1) {
    const option = document.createElement("option");
    option.value = String(hour);
    option.textContent = `${String(hour).padStart(2, "0")}:00`;
    hourSelect.append(option);
  }
  hourSelect.addEventListener("change", () => {
    state.hour = hourSelect.value === "auto" ? null : Number(hourSelect.value);
    void refresh();
  });

  const handleEpsilon = onEpsilonChange(state, client, { onResult: rerender, onError: rerender });
  slider.addEventListener("input", () => {
    sliderValue.textContent = slider.value;
    handleEpsilon(Number(slider.value));
  });

  await refresh();
}

void start();
