// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "codial/config.hpp"
#include "codial/dataset.hpp"
#include "codial/errors.hpp"
#include "codial/evaluation.hpp"
#include "codial/mi_oracle.hpp"
#include "codial/models.hpp"
#include "codial/rng.hpp"
#include "codial/synthetic.hpp"
#include "codial/tensor.hpp"
#include "codial/training.hpp"

namespace {

using codial::Json;

void print_resolved(const std::string& command, const Json& cfg) {
  Json out;
  out["command"] = command;
  out["config"] = cfg;
  std::cout << "resolved config:\n" << out.dump(2) << "\n";
}

void require_written(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw codial::IoError("expected artifact was not written: " + path);
}

Json spec_to_json(const codial::SyntheticShapesSpec& s) {
  Json j;
  j["image_size"] = s.image_size;
  j["per_class_count"] = s.per_class_count;
  j["seed"] = s.seed;
  j["scale_min"] = s.scale_min;
  j["scale_max"] = s.scale_max;
  j["position_jitter"] = s.position_jitter;
  j["color_min"] = s.color_min;
  j["color_max"] = s.color_max;
  j["bg_top_min"] = s.bg_top_min;
  j["bg_top_max"] = s.bg_top_max;
  j["bg_bottom_min"] = s.bg_bottom_min;
  j["bg_bottom_max"] = s.bg_bottom_max;
  return j;
}

codial::Tensor<float> images_to_tensor(const std::vector<codial::Image>& imgs,
                                       std::size_t lo, std::size_t hi) {
  const codial::Image& first = imgs[lo];
  std::vector<float> data;
  data.reserve((hi - lo) * first.numel());
  for (std::size_t i = lo; i < hi; ++i)
    data.insert(data.end(), imgs[i].pixels.begin(), imgs[i].pixels.end());
  return codial::Tensor<float>(
      {hi - lo, first.height, first.width, first.channels}, std::move(data));
}

struct LoadedModel {
  codial::CheckpointData data;
  std::unique_ptr<codial::CodialModel<float>> model;
};

LoadedModel model_from_checkpoint(const std::string& path) {
  LoadedModel out;
  out.data = codial::load_checkpoint(path);
  codial::ModelConfig mcfg = codial::model_config_from_checkpoint(out.data);
  codial::RngStream init(0, 0, 0, codial::Purpose::kInit);
  out.model = std::make_unique<codial::CodialModel<float>>(mcfg, init);
  codial::restore_model(*out.model, out.data);
  return out;
}

// Resolves the -1 sentinel to the final conv stage.
int resolve_stage(const codial::CodialModel<float>& model, int stage) {
  const int count = static_cast<int>(model.config().encoder.stages.size());
  return stage < 0 ? count - 1 : stage;
}

codial::Tensor<float> features_for(codial::CodialModel<float>& model,
                                   const std::vector<codial::Image>& imgs,
                                   int stage, int pooled_dim) {
  constexpr std::size_t kChunk = 256;  // bounds activation memory
  std::vector<float> rows;
  std::size_t dim = 0;
  for (std::size_t lo = 0; lo < imgs.size(); lo += kChunk) {
    const std::size_t hi = std::min(imgs.size(), lo + kChunk);
    codial::Tensor<float> batch = images_to_tensor(imgs, lo, hi);
    codial::Tensor<float> feats =
        codial::extract_features(model, batch, stage, pooled_dim);
    dim = feats.shape()[1];
    rows.insert(rows.end(), feats.values().begin(), feats.values().end());
  }
  return codial::Tensor<float>({imgs.size(), dim}, std::move(rows));
}

Json probe_report_json(const codial::ProbeReport& rep) {
  Json j;
  j["stage"] = rep.stage;
  j["pooled_dim"] = rep.pooled_dim;
  j["train_acc"] = rep.train_acc;
  j["test_acc"] = rep.test_acc;
  j["epochs_run"] = rep.epochs_run;
  j["seed"] = rep.seed;
  return j;
}

codial::ProbeReport probe_checkpoint(const std::string& checkpoint,
                                     const std::string& train_path,
                                     const std::string& test_path, int stage,
                                     codial::ProbeConfig cfg) {
  LoadedModel lm = model_from_checkpoint(checkpoint);
  const int resolved = resolve_stage(*lm.model, stage);
  codial::Dataset train = codial::load_dataset(train_path);
  codial::Dataset test = codial::load_dataset(test_path);
  codial::Tensor<float> train_x =
      features_for(*lm.model, train.images, resolved, cfg.pooled_dim);
  codial::Tensor<float> test_x =
      features_for(*lm.model, test.images, resolved, cfg.pooled_dim);
  cfg.stage = resolved;
  return codial::linear_probe(train_x, train.labels, test_x, test.labels, cfg);
}

struct AblateRow {
  std::string kind;  // "lambda" or "pair-count"
  double lambda_cls = 0;
  double lambda_mi = 0;
  int pair_subset_k = 0;
  double probe_acc = 0;
  std::vector<double> per_seed;
};

int run_gen_data(const codial::SyntheticShapesSpec& spec,
                 const std::string& out_dir) {
  Json cfg = spec_to_json(spec);
  cfg["out"] = out_dir;
  print_resolved("gen-data", cfg);
  codial::gen_synthetic(spec, out_dir);
  const std::string train = out_dir + "/train.cdld";
  const std::string test = out_dir + "/test.cdld";
  require_written(train);
  require_written(test);
  codial::DatasetHeader th = codial::read_dataset_header(train);
  codial::DatasetHeader eh = codial::read_dataset_header(test);
  std::cout << "wrote " << th.count << " train records to " << train << "\n"
            << "wrote " << eh.count << " test records to " << test << "\n";
  return 0;
}

int run_pretrain(const std::string& config_path, const std::string& out_dir,
                 const std::string& resume) {
  codial::TrainConfig cfg = codial::load_train_config(config_path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  print_resolved("pretrain", codial::config_to_json(cfg));
  codial::PretrainResult res = codial::pretrain(cfg, resume);
  require_written(res.checkpoint_path);
  require_written(res.metrics_path);
  std::cout << "final epoch loss_total=" << res.epoch_loss_total.back()
            << " pretext_acc=" << res.epoch_pretext_acc.back() << "\n"
            << "wrote checkpoint to " << res.checkpoint_path << "\n"
            << "wrote metrics to " << res.metrics_path << "\n";
  return 0;
}

int run_probe(const std::string& checkpoint, const std::string& train_path,
              const std::string& test_path, int stage,
              const codial::ProbeConfig& cfg, const std::string& out_dir) {
  Json rc;
  rc["checkpoint"] = checkpoint;
  rc["train"] = train_path;
  rc["test"] = test_path;
  rc["stage"] = stage;
  rc["pooled_dim"] = cfg.pooled_dim;
  rc["epochs"] = cfg.epochs;
  rc["l2"] = cfg.l2;
  rc["lr"] = cfg.lr;
  rc["seed"] = cfg.seed;
  rc["out"] = out_dir;
  print_resolved("probe", rc);
  codial::ProbeReport rep =
      probe_checkpoint(checkpoint, train_path, test_path, stage, cfg);
  Json report = probe_report_json(rep);
  std::filesystem::create_directories(out_dir);
  const std::string path = out_dir + "/probe_report.json";
  {
    std::ofstream out(path, std::ios::trunc);
    out << report.dump(2) << "\n";
  }
  require_written(path);
  std::cout << report.dump(2) << "\n"
            << "wrote probe report to " << path << "\n";
  return 0;
}

int run_retrieve(const std::string& checkpoint, const std::string& data_path,
                 std::size_t query, int k, int stage, int pooled_dim,
                 const std::string& out_dir) {
  Json rc;
  rc["checkpoint"] = checkpoint;
  rc["dataset"] = data_path;
  rc["query"] = query;
  rc["k"] = k;
  rc["stage"] = stage;
  rc["pooled_dim"] = pooled_dim;
  rc["out"] = out_dir;
  print_resolved("retrieve", rc);
  LoadedModel lm = model_from_checkpoint(checkpoint);
  const int resolved = resolve_stage(*lm.model, stage);
  codial::Dataset ds = codial::load_dataset(data_path);
  if (query >= ds.images.size())
    throw codial::ConfigError("query index " + std::to_string(query) +
                              " out of range for " +
                              std::to_string(ds.images.size()) + " records");
  codial::Tensor<float> gallery =
      features_for(*lm.model, ds.images, resolved, pooled_dim);
  const std::size_t dim = gallery.shape()[1];
  std::vector<float> q(gallery.values().begin() + query * dim,
                       gallery.values().begin() + (query + 1) * dim);
  std::vector<std::size_t> hits = codial::knn_retrieve(q, gallery, k);
  auto cosine = [&](std::size_t row) {
    double dot = 0, nq = 0, ng = 0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double a = q[c];
      const double b = gallery.values()[row * dim + c];
      dot += a * b;
      nq += a * a;
      ng += b * b;
    }
    return (nq > 0 && ng > 0) ? dot / std::sqrt(nq * ng) : 0.0;
  };
  Json report;
  report["query_index"] = query;
  report["query_label"] = ds.labels[query];
  report["k"] = k;
  report["neighbors"] = Json::array();
  std::cout << "rank  index  label  similarity\n";
  for (std::size_t r = 0; r < hits.size(); ++r) {
    Json n;
    n["rank"] = r;
    n["index"] = hits[r];
    n["label"] = ds.labels[hits[r]];
    n["similarity"] = cosine(hits[r]);
    report["neighbors"].push_back(n);
    std::printf("%-5zu %-6zu %-6d %.6f\n", r, hits[r], ds.labels[hits[r]],
                cosine(hits[r]));
  }
  std::filesystem::create_directories(out_dir);
  const std::string path = out_dir + "/retrieval.json";
  {
    std::ofstream out(path, std::ios::trunc);
    out << report.dump(2) << "\n";
  }
  require_written(path);
  std::cout << "wrote retrieval report to " << path << "\n";
  return 0;
}

int run_ablate(const std::string& config_path, const std::string& out_dir,
               int seeds) {
  codial::TrainConfig base = codial::load_train_config(config_path);
  Json rc = codial::config_to_json(base);
  rc["out"] = out_dir;
  rc["seeds"] = seeds;
  print_resolved("ablate", rc);
  if (seeds < 1) throw codial::ConfigError("seeds must be >= 1");

  const std::vector<std::pair<double, double>> lambdas{{1, 0}, {0, 1}, {1, 1}};
  const std::vector<int> pair_counts{1, 3, 6, 10};

  // One pretrain+probe per distinct (lambda, k, seed); the lambda=(1,1) row
  // shares its runs with the matching pair-count arm.
  std::map<std::tuple<double, double, int>, std::vector<double>> acc;
  auto run_cell = [&](double lc, double lm, int k, unsigned seed) {
    codial::TrainConfig cfg = base;
    cfg.weights.lambda_cls = lc;
    cfg.weights.lambda_mi = lm;
    cfg.pair_subset_k = k;
    cfg.seed = seed;
    char tag[96];
    std::snprintf(tag, sizeof(tag), "lc%g_lm%g_k%d_s%u", lc, lm, k, seed);
    cfg.output_dir = out_dir + "/runs/" + tag;
    std::cout << "run " << tag << ": pretraining " << cfg.epochs
              << " epoch(s)...\n";
    codial::PretrainResult res = codial::pretrain(cfg);
    codial::ProbeConfig pcfg;
    pcfg.seed = seed;
    codial::ProbeReport rep = probe_checkpoint(
        res.checkpoint_path, cfg.train_path, cfg.eval_path, -1, pcfg);
    std::cout << "run " << tag << ": probe test_acc=" << rep.test_acc << "\n";
    acc[{lc, lm, k}].push_back(rep.test_acc);
  };
  for (int s = 0; s < seeds; ++s) {
    const unsigned seed = base.seed + static_cast<unsigned>(s);
    for (const auto& [lc, lm] : lambdas)
      if (!(lc == 1 && lm == 1)) run_cell(lc, lm, base.pair_subset_k, seed);
    for (int k : pair_counts) run_cell(1, 1, k, seed);
    if (acc.find({1, 1, base.pair_subset_k}) == acc.end())
      run_cell(1, 1, base.pair_subset_k, seed);
  }

  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  std::vector<AblateRow> rows;
  for (const auto& [lc, lm] : lambdas) {
    const auto& v = acc.at({lc, lm, base.pair_subset_k});
    rows.push_back({"lambda", lc, lm, base.pair_subset_k, mean(v), v});
  }
  for (int k : pair_counts) {
    const auto& v = acc.at({1, 1, k});
    rows.push_back({"pair-count", 1, 1, k, mean(v), v});
  }

  std::cout << "ablation table (mean probe accuracy over " << seeds
            << " seed(s))\n";
  std::printf("%-12s %-11s %-10s %-4s %s\n", "kind", "lambda_cls", "lambda_mi",
              "k", "probe_acc");
  Json report;
  report["seeds"] = seeds;
  report["rows"] = Json::array();
  for (const AblateRow& r : rows) {
    std::printf("%-12s %-11g %-10g %-4d %.6f\n", r.kind.c_str(), r.lambda_cls,
                r.lambda_mi, r.pair_subset_k, r.probe_acc);
    Json jr;
    jr["kind"] = r.kind;
    jr["lambda_cls"] = r.lambda_cls;
    jr["lambda_mi"] = r.lambda_mi;
    jr["pair_subset_k"] = r.pair_subset_k;
    jr["probe_acc"] = r.probe_acc;
    jr["per_seed"] = r.per_seed;
    report["rows"].push_back(jr);
  }
  std::filesystem::create_directories(out_dir);
  const std::string path = out_dir + "/ablation.json";
  {
    std::ofstream out(path, std::ios::trunc);
    out << report.dump(2) << "\n";
  }
  require_written(path);
  std::cout << "wrote ablation report to " << path << "\n";
  return 0;
}

int run_mi_oracle(const codial::MiOracleConfig& cfg,
                  const std::string& out_dir) {
  Json rc;
  rc["rho"] = cfg.rho;
  rc["hidden"] = cfg.hidden;
  rc["steps"] = cfg.steps;
  rc["batch"] = cfg.batch;
  rc["eval_batch"] = cfg.eval_batch;
  rc["lr"] = cfg.lr;
  rc["seed"] = cfg.seed;
  if (!out_dir.empty()) rc["out"] = out_dir;
  print_resolved("mi-oracle", rc);
  codial::MiOracleResult res = codial::train_mi_oracle(cfg);
  std::printf("rho=%g true_mi=%.6f estimate=%.6f objective=%.6f error=%.6f\n",
              cfg.rho, res.true_mi, res.estimate, res.objective,
              res.estimate - res.true_mi);
  if (!out_dir.empty()) {
    Json report = rc;
    report["true_mi"] = res.true_mi;
    report["estimate"] = res.estimate;
    report["objective"] = res.objective;
    std::filesystem::create_directories(out_dir);
    const std::string path = out_dir + "/mi_oracle.json";
    std::ofstream out(path, std::ios::trunc);
    out << report.dump(2) << "\n";
    out.close();
    require_written(path);
    std::cout << "wrote oracle report to " << path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "codial: discriminative transformation pretraining with "
      "mutual-information view alignment"};
  app.require_subcommand(1);

  // gen-data
  codial::SyntheticShapesSpec spec;
  std::string gen_out = "out/data";
  CLI::App* gen = app.add_subcommand(
      "gen-data", "Generate the synthetic shapes dataset (80/20 split)");
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
  gen->add_option("--image-size", spec.image_size, "Square image side")
      ->capture_default_str();
  gen->add_option("--per-class", spec.per_class_count, "Images per class")
      ->capture_default_str();
  gen->add_option("--seed", spec.seed, "Generation seed")
      ->capture_default_str();
  gen->add_option("--scale-min", spec.scale_min, "Min shape scale")
      ->capture_default_str();
  gen->add_option("--scale-max", spec.scale_max, "Max shape scale")
      ->capture_default_str();
  gen->add_option("--position-jitter", spec.position_jitter,
                  "Center jitter as a fraction of the side")
      ->capture_default_str();
  gen->add_option("--color-min", spec.color_min, "Min channel intensity")
      ->capture_default_str();
  gen->add_option("--color-max", spec.color_max, "Max channel intensity")
      ->capture_default_str();

  // pretrain
  std::string train_config;
  std::string train_out;
  std::string train_resume;
  CLI::App* pre = app.add_subcommand("pretrain", "Run self-supervised pretraining");
  pre->add_option("--config", train_config, "Training config JSON")->required();
  pre->add_option("--out", train_out, "Override the config's output directory");
  pre->add_option("--resume", train_resume, "Checkpoint to continue from");

  // probe
  std::string probe_ckpt, probe_train, probe_test, probe_out = "out";
  int probe_stage = -1;
  codial::ProbeConfig probe_cfg;
  CLI::App* prb = app.add_subcommand(
      "probe", "Linear probe on frozen features from a checkpoint");
  prb->add_option("--checkpoint", probe_ckpt, "Checkpoint file")->required();
  prb->add_option("--train", probe_train, "Train dataset file")->required();
  prb->add_option("--test", probe_test, "Test dataset file")->required();
  prb->add_option("--stage", probe_stage, "Conv stage (-1 = final)")
      ->capture_default_str();
  prb->add_option("--pooled-dim", probe_cfg.pooled_dim, "Pooled feature budget")
      ->capture_default_str();
  prb->add_option("--epochs", probe_cfg.epochs, "Probe GD iteration cap")
      ->capture_default_str();
  prb->add_option("--l2", probe_cfg.l2, "Probe L2 penalty")
      ->capture_default_str();
  prb->add_option("--lr", probe_cfg.lr, "Probe learning rate")
      ->capture_default_str();
  prb->add_option("--seed", probe_cfg.seed, "Probe seed tag")
      ->capture_default_str();
  prb->add_option("--out", probe_out, "Report directory")
      ->capture_default_str();

  // retrieve
  std::string ret_ckpt, ret_data, ret_out = "out";
  std::size_t ret_query = 0;
  int ret_k = 5, ret_stage = -1, ret_pooled = 1024;
  CLI::App* ret = app.add_subcommand(
      "retrieve", "Nearest neighbors of a query image in feature space");
  ret->add_option("--checkpoint", ret_ckpt, "Checkpoint file")->required();
  ret->add_option("--dataset", ret_data, "Gallery dataset file")->required();
  ret->add_option("--query", ret_query, "Query record index")->required();
  ret->add_option("--k", ret_k, "Neighbor count")->capture_default_str();
  ret->add_option("--stage", ret_stage, "Conv stage (-1 = final)")
      ->capture_default_str();
  ret->add_option("--pooled-dim", ret_pooled, "Pooled feature budget")
      ->capture_default_str();
  ret->add_option("--out", ret_out, "Report directory")->capture_default_str();

  // ablate
  std::string abl_config, abl_out = "out/ablate";
  int abl_seeds = 1;
  CLI::App* abl = app.add_subcommand(
      "ablate", "Loss-weight and pair-count ablation sweep");
  abl->add_option("--config", abl_config, "Base training config JSON")
      ->required();
  abl->add_option("--out", abl_out, "Sweep output directory")
      ->capture_default_str();
  abl->add_option("--seeds", abl_seeds, "Seeds per cell (base.seed + i)")
      ->capture_default_str();

  // mi-oracle
  codial::MiOracleConfig mi_cfg;
  std::string mi_out;
  CLI::App* mio = app.add_subcommand(
      "mi-oracle", "Train the JS critic on Gaussians with known MI");
  mio->add_option("--rho", mi_cfg.rho, "Correlation coefficient, |rho| < 1")
      ->capture_default_str();
  mio->add_option("--hidden", mi_cfg.hidden, "Critic hidden width")
      ->capture_default_str();
  mio->add_option("--steps", mi_cfg.steps, "Training steps")
      ->capture_default_str();
  mio->add_option("--batch", mi_cfg.batch, "Training batch size")
      ->capture_default_str();
  mio->add_option("--eval-batch", mi_cfg.eval_batch, "Held-out eval size")
      ->capture_default_str();
  mio->add_option("--lr", mi_cfg.lr, "Adam learning rate")
      ->capture_default_str();
  mio->add_option("--seed", mi_cfg.seed, "Sampling seed")
      ->capture_default_str();
  mio->add_option("--out", mi_out, "Optional report directory");

  int rc = 0;
  gen->callback([&] { rc = run_gen_data(spec, gen_out); });
  pre->callback([&] { rc = run_pretrain(train_config, train_out, train_resume); });
  prb->callback([&] {
    rc = run_probe(probe_ckpt, probe_train, probe_test, probe_stage, probe_cfg,
                   probe_out);
  });
  ret->callback([&] {
    rc = run_retrieve(ret_ckpt, ret_data, ret_query, ret_k, ret_stage,
                      ret_pooled, ret_out);
  });
  abl->callback([&] { rc = run_ablate(abl_config, abl_out, abl_seeds); });
  mio->callback([&] { rc = run_mi_oracle(mi_cfg, mi_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
