#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>

#include "relcont/scenes.hpp"

namespace relcont {

bool glob_match(const std::string& pattern, const std::string& text) {
  std::size_t p = 0, t = 0, star = std::string::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

namespace {

unsigned worker_count(std::size_t jobs) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("RELCONT_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) hw = std::min<unsigned>(hw, unsigned(v));
  }
  return unsigned(std::min<std::size_t>(hw, std::max<std::size_t>(jobs, 1)));
}

}  // namespace

Report run_suite(const Scene& scene, const std::string& only) {
  auto all = scene_checks(scene);
  std::vector<SceneCheck> selected;
  for (auto& c : all)
    if (glob_match(only, c.name)) selected.push_back(std::move(c));
  std::sort(selected.begin(), selected.end(),
            [](const SceneCheck& a, const SceneCheck& b) { return a.name < b.name; });

  Report rep;
  rep.scene = scene.name;
  rep.environment.seed = scene.seed;
  rep.environment.grid_sizes = {scene.grid};
  rep.environment.constants = {{"G", scene.constants.G}, {"c", scene.constants.c}};
  rep.environment.timestamp = report_timestamp();
  rep.checks.resize(selected.size());

  // checks run concurrently; results land in name order regardless of timing
  std::atomic<std::size_t> cursor{0};
  auto work = [&]() {
    for (std::size_t i; (i = cursor.fetch_add(1)) < selected.size();) {
      CheckResult r;
      try {
        r = selected[i].run();
      } catch (const std::exception& e) {
        r.mode = "error";
        r.pass = false;
        r.error = e.what();
      }
      r.name = selected[i].name;
      r.anchor = selected[i].anchor;
      rep.checks[i] = std::move(r);
    }
  };
  unsigned n = worker_count(selected.size());
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  return rep;
}

}  // namespace relcont
