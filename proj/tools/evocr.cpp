// evocr: runs the event-camera OCR pipeline from one config file.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "evocr/ocr.hpp"
#include "evocr/pipeline.hpp"

using namespace evocr;
using nlohmann::ordered_json;

namespace {

struct Options {
  std::string config;
  std::optional<std::string> output_dir;
  bool json = false;
  std::string sweep_heights = "2..12";
};

void emit_error(const Options& opt, const std::string& stage, const std::string& what, int code) {
  if (opt.json) {
    ordered_json j{{"type", "error"}, {"stage", stage}, {"message", what}, {"exit_code", code}};
    std::cout << j.dump() << "\n";
  } else {
    std::cerr << "evocr: " << (stage.empty() ? "" : stage + ": ") << what << "\n";
  }
}

void emit_stage(const Options& opt, const pipeline::StageRecord& rec) {
  if (opt.json) {
    auto arts = ordered_json::array();
    for (const auto& a : rec.artifacts) arts.push_back({{"path", a.path}, {"bytes", a.bytes}, {"sha256", a.sha256}});
    ordered_json j{{"type", "stage"},
                   {"stage", pipeline::to_string(rec.stage)},
                   {"wall_ms", rec.wall_ms},
                   {"artifacts", arts}};
    std::cout << j.dump() << "\n";
    return;
  }
  std::cout << pipeline::to_string(rec.stage) << " (" << rec.wall_ms << " ms)\n";
  for (const auto& a : rec.artifacts) std::cout << "  " << a.path << "  " << a.bytes << " B\n";
}

void emit_ledger(const Options& opt, const shaping::BandwidthLedger& ledger) {
  if (!opt.json) {
    std::cout << "# reduction vs " << ledger.reference_bytes() << " B RGB reference\n" << ledger.to_csv();
    return;
  }
  for (const auto& [stage, bytes] : ledger.stages()) {
    const auto r = ledger.reduction(stage);
    ordered_json j{{"type", "ledger"},
                   {"stage", stage},
                   {"bytes", bytes},
                   {"reduction_factor", r.den == 0 ? -1.0 : r.value()}};
    std::cout << j.dump() << "\n";
  }
}

void emit_rows(const Options& opt, const std::vector<ocr::ReportRow>& rows, const char* type) {
  if (!opt.json) {
    std::cout << ocr::format_report(rows);
    return;
  }
  auto opt_num = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  for (const auto& r : rows) {
    ordered_json j{{"type", type},         {"class_or_height", r.key}, {"backend", r.backend},
                   {"wer", opt_num(r.wer)}, {"cer", opt_num(r.cer)},    {"bytes", r.bytes},
                   {"latency_ms", r.latency_ms}};
    std::cout << j.dump() << "\n";
  }
}

std::vector<int> parse_heights(const std::string& spec) {
  std::vector<int> out;
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    const int lo = std::stoi(spec.substr(0, dots)), hi = std::stoi(spec.substr(dots + 2));
    if (lo < 1 || hi < lo) throw pipeline::ConfigError("bad height range '" + spec + "'");
    for (int h = lo; h <= hi; ++h) out.push_back(h);
    return out;
  }
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const auto comma = spec.find(',', pos);
    const int h = std::stoi(spec.substr(pos, comma - pos));
    if (h < 1) throw pipeline::ConfigError("bad height '" + std::to_string(h) + "'");
    out.push_back(h);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

pipeline::PipelineConfig load(const Options& opt) {
  auto cfg = pipeline::load_config(opt.config);
  if (opt.output_dir) {
    cfg.output_dir = *opt.output_dir;
    cfg.validate();
  }
  return cfg;
}

int run_one(const Options& opt, pipeline::Stage stage) {
  pipeline::PipelineConfig cfg;
  try {
    cfg = load(opt);
  } catch (const std::exception& e) {
    emit_error(opt, "", e.what(), pipeline::kExitConfig);
    return pipeline::kExitConfig;
  }
  try {
    emit_stage(opt, pipeline::run_stage(cfg, stage));
    if (stage == pipeline::Stage::kReport) {
      emit_ledger(opt, pipeline::ledger_from_run(cfg.output_dir));
      emit_rows(opt, ocr::sweep_rows(ocr::letter_height_sweep(cfg.page_text(), parse_heights(opt.sweep_heights), cfg.ocr),
                                     cfg.ocr.label()),
                "sweep");
    }
  } catch (const std::exception& e) {
    const int code = pipeline::exit_code_for(stage, e);
    emit_error(opt, pipeline::to_string(stage), e.what(), code);
    return code;
  }
  return pipeline::kExitOk;
}

int run_all(const Options& opt) {
  pipeline::PipelineConfig cfg;
  try {
    cfg = load(opt);
  } catch (const std::exception& e) {
    emit_error(opt, "", e.what(), pipeline::kExitConfig);
    return pipeline::kExitConfig;
  }
  const auto m = pipeline::run_pipeline(cfg);
  for (const auto& rec : m.stages) emit_stage(opt, rec);
  if (m.failed_stage) {
    emit_error(opt, pipeline::to_string(*m.failed_stage), m.error, m.exit_code);
    return m.exit_code;
  }
  emit_ledger(opt, m.ledger);
  if (opt.json) {
    ordered_json j{{"type", "result"},
                   {"wer", m.rates->wer},
                   {"cer", m.rates->cer},
                   {"manifest", (cfg.output_dir / pipeline::files::kManifest).string()}};
    std::cout << j.dump() << "\n";
  } else {
    std::cout << "wer " << m.rates->wer << "  cer " << m.rates->cer << "\n";
  }
  return m.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaze-foveated event-camera OCR pipeline"};
  app.require_subcommand(1);
  Options opt;
  app.add_flag("--json", opt.json, "Line-delimited JSON output");

  auto add_common = [&opt](CLI::App* sub) {
    sub->add_option("-c,--config", opt.config, "Pipeline config file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output-dir", opt.output_dir, "Override run.output_dir");
    sub->add_flag("--json", opt.json, "Line-delimited JSON output");
  };

  for (pipeline::Stage stage : pipeline::kStages) {
    auto* sub = app.add_subcommand(pipeline::to_string(stage), "Run the " + pipeline::to_string(stage) + " stage");
    add_common(sub);
    if (stage == pipeline::Stage::kReport)
      sub->add_option("--sweep-heights", opt.sweep_heights, "Letter heights for the sweep, lo..hi or a,b,c");
    sub->callback([stage, &opt] { throw CLI::RuntimeError(run_one(opt, stage)); });
  }
  auto* run = app.add_subcommand("run", "Run every stage and write manifest.json");
  add_common(run);
  run->callback([&opt] { throw CLI::RuntimeError(run_all(opt)); });

  auto* keys = app.add_subcommand("keys", "List recognised config keys");
  keys->callback([] {
    for (const auto& k : pipeline::config_keys()) std::cout << k << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::RuntimeError& e) {
    return e.get_exit_code();
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pipeline::kExitConfig;
  }
  return 0;
}
