// Command-line front end: simulate, screen, fit, path, check-id, equiv,
// hierarchy, bench, pipeline. Every command writes a run manifest next to its
// outputs so results can be reproduced bit-exactly.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "slam/analysis.hpp"
#include "slam/estimation.hpp"
#include "slam/identifiability.hpp"
#include "slam/io.hpp"
#include "slam/screening.hpp"
#include "slam/simulation.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

#ifndef SLAM_VERSION
#define SLAM_VERSION "dev"
#endif

struct ManifestInfo {
  std::string command;
  json config = json::object();
  std::map<std::string, std::string> inputs;  // path -> digest
  std::uint64_t seed = 0;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << j.dump(2) << '\n';
}

void write_manifest(const ManifestInfo& m, const std::string& out_dir) {
  const auto wall =
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - m.start)
          .count();
  json j;
  j["command"] = m.command;
  j["version"] = SLAM_VERSION;
  j["seed"] = m.seed;
  j["config"] = m.config;
  j["inputs"] = json::object();
  for (const auto& [path, digest] : m.inputs) j["inputs"][path] = digest;
  j["wall_ms"] = wall;
  write_json((fs::path(out_dir) / ("manifest-" + m.command + ".json")).string(), j);
}

void note_input(ManifestInfo& m, const std::string& path) {
  m.inputs[path] = slam::file_digest(path);
}

json patterns_to_json(const slam::PatternSet& a) {
  json arr = json::array();
  for (const auto& p : a) arr.push_back(p.to_string());
  return arr;
}

Eigen::MatrixXd load_responses(const std::string& path) {
  return slam::to_matrix(slam::load_binary_csv(path));
}

slam::PatternSet resolve_input_set(const std::string& patterns_path, int k,
                                   int threshold_k) {
  if (!patterns_path.empty()) return slam::load_pattern_set(patterns_path);
  if (k > threshold_k)
    throw std::runtime_error(
        "candidate space 2^" + std::to_string(k) +
        " is too large to enumerate; supply --patterns or run `screen` first");
  return slam::PatternSet::full(k);
}

json fit_to_json(const slam::FitResult& fit) {
  json j;
  j["model"] = slam::to_string(fit.model);
  j["algo"] = slam::to_string(fit.algo);
  j["tuning"] = fit.tuning;
  j["loglik"] = fit.loglik;
  j["loglik_selected"] = fit.loglik_selected;
  j["objective"] = fit.objective;
  j["ebic"] = fit.ebic;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["clamp_events"] = fit.clamp_events;
  j["mstep_fallbacks"] = fit.mstep_fallbacks;
  j["support_size"] = fit.selected.size();
  j["selected"] = patterns_to_json(fit.selected);
  j["p_selected"] = fit.p_selected;
  if (fit.theta_hat.kind == slam::ModelKind::two_param) {
    j["theta_plus"] = fit.theta_hat.theta_plus;
    j["theta_minus"] = fit.theta_hat.theta_minus;
  } else {
    j["theta_cells"] = fit.theta_hat.theta_cells;
  }
  if (!fit.warnings.empty()) j["warnings"] = fit.warnings;
  return j;
}

json report_to_json(const slam::IdentifiabilityReport& rep) {
  json j;
  j["verdict"] = slam::to_string(rep.verdict);
  j["condition_b"] = rep.condition_b;
  j["condition_c"] = rep.condition_c;
  j["search_exhaustive"] = rep.search_exhaustive;
  if (rep.condition_a) {
    j["condition_a"] = {{"s1", rep.condition_a->s1}, {"s2", rep.condition_a->s2}};
  } else {
    j["condition_a"] = nullptr;
  }
  if (!rep.notes.empty()) j["notes"] = rep.notes;
  return j;
}

void apply_algo_flag(slam::FitConfig& cfg, const std::string& algo,
                     const std::string& model) {
  if (algo == "pem") cfg.algo = slam::Algo::pem;
  else if (algo == "fpvem") cfg.algo = slam::Algo::fpvem;
  else if (algo == "em") cfg.algo = slam::Algo::em;
  else throw std::runtime_error("unknown algorithm: " + algo);
  if (model == "two-param") cfg.model = slam::ModelKind::two_param;
  else if (model == "all-effect") cfg.model = slam::ModelKind::all_effect;
  else throw std::runtime_error("unknown model: " + model);
}

std::vector<double> parse_grid(const std::string& spec, slam::Algo algo) {
  if (spec.empty())
    return algo == slam::Algo::fpvem ? slam::default_upsilon_grid()
                                     : slam::default_lambda_grid();
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

json path_to_json(const slam::SolutionPath& path) {
  json steps = json::array();
  for (std::size_t b = 0; b < path.fits.size(); ++b) {
    const auto& f = path.fits[b];
    steps.push_back({{"tuning", path.tuning[b]},
                     {"ebic", f.ebic},
                     {"support_size", f.selected.size()},
                     {"loglik", f.loglik},
                     {"iterations", f.iterations},
                     {"converged", f.converged}});
  }
  json j;
  j["grid"] = steps;
  j["chosen_index"] = path.chosen;
  j["chosen"] = fit_to_json(path.best());
  return j;
}

json hierarchy_to_json(const slam::HierarchyGraph& h) {
  json j;
  j["groups"] = h.groups;
  json edges = json::array();
  for (const auto& [a, b] : h.edges) edges.push_back({a, b});
  j["edges"] = edges;
  return j;
}

void write_dot(const std::string& path, const slam::HierarchyGraph& h) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "digraph hierarchy {\n";
  for (std::size_t g = 0; g < h.groups.size(); ++g) {
    out << "  g" << g << " [label=\"";
    for (std::size_t i = 0; i < h.groups[g].size(); ++i)
      out << (i ? "," : "") << "a" << (h.groups[g][i] + 1);
    out << "\"];\n";
  }
  for (const auto& [a, b] : h.edges) out << "  g" << a << " -> g" << b << ";\n";
  out << "}\n";
}

std::vector<std::vector<std::uint8_t>> to_rows(const Eigen::MatrixXd& m) {
  std::vector<std::vector<std::uint8_t>> rows(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          m(i, j) > 0.5 ? 1 : 0;
  }
  return rows;
}

std::vector<std::vector<std::uint8_t>> q_to_rows(const slam::QMatrix& q) {
  std::vector<std::vector<std::uint8_t>> rows(static_cast<std::size_t>(q.J()));
  for (int j = 0; j < q.J(); ++j) {
    rows[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(q.K()));
    for (int k = 0; k < q.K(); ++k)
      rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] = q(j, k);
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent attribute pattern learning for structured latent attribute models"};
  app.set_config("--config", "", "Read options from a key=value file");
  app.set_version_flag("--version", SLAM_VERSION);
  int threads = 1;
  app.add_option("--threads", threads,
                 "Worker thread count (output is deterministic regardless)")
      ->capture_default_str();
  app.require_subcommand(1);

  int exit_code = 0;

  // ---- simulate ----
  {
    auto* cmd = app.add_subcommand("simulate", "Generate a synthetic block-design scenario");
    auto d = std::make_shared<slam::SimDesign>();
    auto model = std::make_shared<std::string>("two-param");
    auto out_dir = std::make_shared<std::string>(".");
    cmd->add_option("--k", d->k, "Number of attributes")->capture_default_str();
    cmd->add_option("--n", d->n, "Number of subjects")->capture_default_str();
    cmd->add_option("--model", *model, "two-param or all-effect")->capture_default_str();
    cmd->add_option("--noise", d->noise, "Two-parameter noise level")->capture_default_str();
    cmd->add_option("--base", d->base, "All-effect baseline probability")->capture_default_str();
    cmd->add_option("--top", d->top, "All-effect full-profile probability")->capture_default_str();
    cmd->add_option("--a0-size", d->a0_size, "Number of true patterns")->capture_default_str();
    cmd->add_option("--seed", d->seed, "RNG seed")->capture_default_str();
    cmd->add_option("--out-dir", *out_dir, "Output directory")->capture_default_str();
    cmd->callback([=]() {
      d->model = *model == "all-effect" ? slam::SimModel::all_effect
                                        : slam::SimModel::two_param;
      ManifestInfo m;
      m.command = "simulate";
      m.seed = d->seed;
      m.config = {{"k", d->k},        {"n", d->n},   {"model", *model},
                  {"noise", d->noise}, {"base", d->base}, {"top", d->top},
                  {"a0_size", d->a0_size}, {"out_dir", *out_dir}};
      fs::create_directories(*out_dir);
      const auto s = slam::make_scenario(*d);
      slam::save_binary_csv((fs::path(*out_dir) / "responses.csv").string(),
                            to_rows(s.data.responses));
      slam::save_binary_csv((fs::path(*out_dir) / "q.csv").string(), q_to_rows(s.q));
      json truth;
      truth["a0"] = patterns_to_json(s.a0);
      std::vector<double> p(s.p0.size());
      for (std::size_t l = 0; l < s.p0.size(); ++l) p[l] = s.p0[l];
      truth["p"] = p;
      if (d->model == slam::SimModel::two_param) {
        truth["theta_plus"] = 1.0 - d->noise;
        truth["theta_minus"] = d->noise;
      } else {
        truth["base"] = d->base;
        truth["top"] = d->top;
      }
      write_json((fs::path(*out_dir) / "truth.json").string(), truth);
      write_manifest(m, *out_dir);
      std::cout << "wrote " << (fs::path(*out_dir) / "responses.csv").string()
                << " (" << d->n << "x" << d->j() << ")\n";
    });
  }

  // ---- screen ----
  {
    auto* cmd = app.add_subcommand("screen", "Gibbs screening of the candidate pattern space");
    auto responses = std::make_shared<std::string>();
    auto qpath = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>(".");
    auto cfg = std::make_shared<slam::ScreenConfig>();
    auto enhance = std::make_shared<int>(0);
    auto variational = std::make_shared<bool>(false);
    cmd->add_option("--responses", *responses, "Response CSV")->required();
    cmd->add_option("--q", *qpath, "Q-matrix CSV")->required();
    cmd->add_option("--m-max", cfg->m_max, "Gibbs sweeps per outer iteration")->capture_default_str();
    cmd->add_option("--m-eff", cfg->m_eff, "Trailing sweeps kept")->capture_default_str();
    cmd->add_option("--max-outer", cfg->max_outer, "Outer iteration cap")->capture_default_str();
    cmd->add_option("--tol", cfg->tol, "Item-parameter convergence tolerance")->capture_default_str();
    cmd->add_option("--enhance-period", *enhance, "Snapshot-union period (0 = off)")->capture_default_str();
    cmd->add_flag("--variational", *variational, "Probability-carrying variant");
    cmd->add_option("--seed", cfg->seed, "RNG seed")->capture_default_str();
    cmd->add_option("--out-dir", *out_dir, "Output directory")->capture_default_str();
    cmd->callback([=]() {
      if (*enhance > 0) cfg->enhance_period = *enhance;
      ManifestInfo m;
      m.command = "screen";
      m.seed = cfg->seed;
      m.config = {{"responses", *responses}, {"q", *qpath},
                  {"m_max", cfg->m_max},     {"m_eff", cfg->m_eff},
                  {"max_outer", cfg->max_outer}, {"tol", cfg->tol},
                  {"enhance_period", *enhance},  {"variational", *variational},
                  {"out_dir", *out_dir}};
      note_input(m, *responses);
      note_input(m, *qpath);
      fs::create_directories(*out_dir);
      const auto r = load_responses(*responses);
      const auto q = slam::load_q_matrix(*qpath);
      const auto res = *variational ? slam::variational_screen(r, q, *cfg)
                                    : slam::gibbs_screen(r, q, *cfg);
      slam::save_pattern_set((fs::path(*out_dir) / "screened_patterns.txt").string(),
                             res.a_screen);
      json j;
      j["size"] = res.a_screen.size();
      j["outer_iterations"] = res.outer_iterations;
      j["converged"] = res.converged;
      j["snapshots_used"] = res.snapshots_used;
      j["theta_plus"] = res.theta_plus;
      j["theta_minus"] = res.theta_minus;
      write_json((fs::path(*out_dir) / "screen.json").string(), j);
      write_manifest(m, *out_dir);
      std::cout << "screened " << res.a_screen.size() << " candidate patterns\n";
    });
  }

  // ---- fit / path ----
  for (const bool is_path : {false, true}) {
    auto* cmd = app.add_subcommand(
        is_path ? "path" : "fit",
        is_path ? "Solution path over a tuning grid with EBIC selection"
                : "Single penalized or variational EM fit");
    auto responses = std::make_shared<std::string>();
    auto qpath = std::make_shared<std::string>();
    auto patterns = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>(".");
    auto algo = std::make_shared<std::string>("pem");
    auto model = std::make_shared<std::string>("two-param");
    auto grid_spec = std::make_shared<std::string>();
    auto cfg = std::make_shared<slam::FitConfig>();
    auto threshold_k = std::make_shared<int>(12);
    cmd->add_option("--responses", *responses, "Response CSV")->required();
    cmd->add_option("--q", *qpath, "Q-matrix CSV")->required();
    cmd->add_option("--patterns", *patterns, "Candidate pattern file (default: full space)");
    cmd->add_option("--algo", *algo, "pem, fpvem, or em")->capture_default_str();
    cmd->add_option("--model", *model, "two-param or all-effect")->capture_default_str();
    if (is_path)
      cmd->add_option("--grid", *grid_spec, "Comma-separated descending tuning grid");
    else {
      cmd->add_option("--lambda", cfg->lambda, "PEM penalty weight")->capture_default_str();
      cmd->add_option("--upsilon", cfg->upsilon, "FP-VEM power")->capture_default_str();
    }
    cmd->add_option("--beta", cfg->beta, "FP-VEM Dirichlet hyperparameter")->capture_default_str();
    cmd->add_option("--c", cfg->c, "PEM clamp constant")->capture_default_str();
    cmd->add_option("--rho", cfg->rho, "Selection threshold (default 1/(2N))");
    cmd->add_option("--gamma", cfg->ebic_gamma, "EBIC gamma")->capture_default_str();
    cmd->add_option("--max-iter", cfg->max_iter, "Iteration cap")->capture_default_str();
    cmd->add_option("--tol", cfg->tol, "Convergence tolerance")->capture_default_str();
    cmd->add_option("--max-k-enumerate", *threshold_k,
                    "Largest K for which the full space is enumerated")->capture_default_str();
    cmd->add_option("--out-dir", *out_dir, "Output directory")->capture_default_str();
    cmd->callback([=]() {
      apply_algo_flag(*cfg, *algo, *model);
      ManifestInfo m;
      m.command = is_path ? "path" : "fit";
      m.config = {{"responses", *responses}, {"q", *qpath}, {"patterns", *patterns},
                  {"algo", *algo},   {"model", *model},   {"beta", cfg->beta},
                  {"c", cfg->c},     {"rho", cfg->rho},   {"gamma", cfg->ebic_gamma},
                  {"max_iter", cfg->max_iter}, {"tol", cfg->tol},
                  {"out_dir", *out_dir}};
      note_input(m, *responses);
      note_input(m, *qpath);
      if (!patterns->empty()) note_input(m, *patterns);
      fs::create_directories(*out_dir);
      const auto r = load_responses(*responses);
      const auto q = slam::load_q_matrix(*qpath);
      const auto a_input = resolve_input_set(*patterns, q.K(), *threshold_k);
      if (is_path) {
        const auto grid = parse_grid(*grid_spec, cfg->algo);
        m.config["grid"] = grid;
        const auto path = slam::solution_path(r, q, a_input, grid, *cfg);
        write_json((fs::path(*out_dir) / "path.json").string(), path_to_json(path));
        slam::save_pattern_set((fs::path(*out_dir) / "selected_patterns.txt").string(),
                               path.best().selected);
        write_manifest(m, *out_dir);
        std::cout << "chose tuning " << path.tuning[path.chosen] << " with support "
                  << path.best().selected.size() << "\n";
      } else {
        m.config["lambda"] = cfg->lambda;
        m.config["upsilon"] = cfg->upsilon;
        const auto fit = slam::detail::run_fit(r, q, a_input, *cfg, {});
        write_json((fs::path(*out_dir) / "fit.json").string(), fit_to_json(fit));
        slam::save_pattern_set((fs::path(*out_dir) / "selected_patterns.txt").string(),
                               fit.selected);
        write_manifest(m, *out_dir);
        std::cout << "support " << fit.selected.size() << ", ebic " << fit.ebic << "\n";
      }
    });
  }

  // ---- check-id ----
  {
    auto* cmd = app.add_subcommand("check-id", "Identifiability conditions for (Q, A0)");
    auto qpath = std::make_shared<std::string>();
    auto patterns = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>(".");
    auto generic = std::make_shared<bool>(false);
    auto partial = std::make_shared<bool>(false);
    cmd->add_option("--q", *qpath, "Q-matrix CSV")->required();
    cmd->add_option("--patterns", *patterns, "True pattern set file")->required();
    cmd->add_flag("--generic", *generic, "Also run the generic (flip-search) checks");
    cmd->add_flag("--partial", *partial, "Treat the set as equivalence-class representatives");
    cmd->add_option("--out-dir", *out_dir, "Output directory")->capture_default_str();
    cmd->callback([=]() {
      ManifestInfo m;
      m.command = "check-id";
      m.config = {{"q", *qpath}, {"patterns", *patterns}, {"generic", *generic},
                  {"partial", *partial}, {"out_dir", *out_dir}};
      note_input(m, *qpath);
      note_input(m, *patterns);
      fs::create_directories(*out_dir);
      const auto q = slam::load_q_matrix(*qpath);
      const auto a0 = slam::load_pattern_set(*patterns);
      slam::IdentifiabilityReport rep = *partial ? slam::check_partial(q, a0)
                                                 : slam::check_strict(q, a0);
      json j = report_to_json(rep);
      if (*generic && !*partial) {
        const auto g = slam::build_gamma(q, a0);
        bool exhaustive = false;
        j["generic_gamma"] = slam::check_generic_gamma(g, q, a0, 2, -1, &exhaustive);
        j["generic_gamma_exhaustive"] = exhaustive;
        j["generic_q"] = slam::check_generic_Q(q);
      }
      write_json((fs::path(*out_dir) / "identifiability.json").string(), j);
      write_manifest(m, *out_dir);
      std::cout << "verdict: " << slam::to_string(rep.verdict) << "\n";
    });
  }

  // ---- equiv ----
  {
    auto* cmd = app.add_subcommand("equiv", "Equivalence-class representatives induced by Q");
    auto qpath = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>(".");
    cmd->add_option("--q", *qpath, "Q-matrix CSV")->required();
    cmd->add_option("--out-dir", *out_dir, "Output directory")->capture_default_str();
    cmd->callback([=]() {
      ManifestInfo m;
      m.command = "equiv";
      m.config = {{"q", *qpath}, {"out_dir", *out_dir}};
      note_input(m, *qpath);
      fs::create_directories(*out_dir);
      const auto q = slam::load_q_matrix(*qpath);
      const auto classes = slam::equivalence_classes(q);
      json j;
      j["count"] = classes.size();
      j["representatives"] = patterns_to_json(classes);
      write_json((fs::path(*out_dir) / "equivalence.json").string(), j);
      slam::save_pattern_set((fs::path(*out_dir) / "representatives.txt").string(), classes);
      write_manifest(m, *out_dir);
      std::cout << classes.size() << " equivalence classes\n";
    });
  }

  // ---- hierarchy ----
  {
    auto* cmd = app.add_subcommand("hierarchy", "Attribute hierarchy implied by a selected set");
    auto patterns = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>(".");
    cmd->add_option("--patterns", *patterns, "Selected pattern file")->required();
    cmd->add_option("--out-dir", *out_dir, "Output directory")->capture_default_str();
    cmd->callback([=]() {
      ManifestInfo m;
      m.command = "hierarchy";
      m.config = {{"patterns", *patterns}, {"out_dir", *out_dir}};
      note_input(m, *patterns);
      fs::create_directories(*out_dir);
      const auto a = slam::load_pattern_set(*patterns);
      const auto h = slam::extract_hierarchy(a);
      write_json((fs::path(*out_dir) / "hierarchy.json").string(), hierarchy_to_json(h));
      write_dot((fs::path(*out_dir) / "hierarchy.dot").string(), h);
      write_manifest(m, *out_dir);
      std::cout << h.groups.size() << " groups, " << h.edges.size() << " edges\n";
    });
  }

  // ---- bench ----
  {
    auto* cmd = app.add_subcommand("bench", "Replicated scenario grid with accuracy summary");
    auto k = std::make_shared<int>(10);
    auto model = std::make_shared<std::string>("two-param");
    auto algo = std::make_shared<std::string>("pem");
    auto n_list = std::make_shared<std::string>("500");
    auto noise_list = std::make_shared<std::string>("0.1");
    auto reps = std::make_shared<int>(10);
    auto a0_size = std::make_shared<int>(10);
    auto seed = std::make_shared<std::uint64_t>(1);
    auto out_path = std::make_shared<std::string>("bench.csv");
    cmd->add_option("--k", *k, "Attributes")->capture_default_str();
    cmd->add_option("--model", *model, "two-param or all-effect")->capture_default_str();
    cmd->add_option("--algo", *algo, "pem, fpvem, or em")->capture_default_str();
    cmd->add_option("--n-list", *n_list, "Comma-separated sample sizes")->capture_default_str();
    cmd->add_option("--noise-list", *noise_list, "Comma-separated noise levels")->capture_default_str();
    cmd->add_option("--reps", *reps, "Replicates per scenario")->capture_default_str();
    cmd->add_option("--a0-size", *a0_size, "True pattern count")->capture_default_str();
    cmd->add_option("--seed", *seed, "Base seed")->capture_default_str();
    cmd->add_option("--out", *out_path, "Output CSV")->capture_default_str();
    cmd->callback([=]() {
      ManifestInfo m;
      m.command = "bench";
      m.seed = *seed;
      m.config = {{"k", *k},       {"model", *model}, {"algo", *algo},
                  {"n_list", *n_list}, {"noise_list", *noise_list},
                  {"reps", *reps}, {"a0_size", *a0_size}, {"out", *out_path}};
      std::vector<int> ns;
      std::vector<double> noises;
      {
        std::stringstream ss(*n_list);
        std::string tok;
        while (std::getline(ss, tok, ',')) ns.push_back(std::stoi(tok));
        std::stringstream ss2(*noise_list);
        while (std::getline(ss2, tok, ',')) noises.push_back(std::stod(tok));
      }
      std::ofstream out(*out_path);
      if (!out) throw std::runtime_error("cannot write file: " + *out_path);
      out << "scenario,algo,mean_tpr,mean_1mfdr,mean_support\n";
      for (int n : ns)
        for (double noise : noises) {
          std::vector<slam::AccuracyRecord> recs;
          for (int rep = 0; rep < *reps; ++rep) {
            slam::SimDesign d;
            d.k = *k;
            d.n = n;
            d.model = *model == "all-effect" ? slam::SimModel::all_effect
                                             : slam::SimModel::two_param;
            d.noise = noise;
            d.base = noise;
            d.top = 1.0 - noise;
            d.a0_size = *a0_size;
            d.seed = *seed + static_cast<std::uint64_t>(rep) * 1000003ULL;
            const auto s = slam::make_scenario(d);
            slam::FitConfig cfg;
            apply_algo_flag(cfg, *algo, *model);
            const auto a_input = slam::PatternSet::full(*k);
            slam::PatternSet sel(d.k);
            if (cfg.algo == slam::Algo::em) {
              sel = slam::em_fit(s.data.responses, s.q, a_input, cfg).selected;
            } else {
              const auto grid = parse_grid("", cfg.algo);
              sel = slam::solution_path(s.data.responses, s.q, a_input, grid, cfg)
                        .best().selected;
            }
            recs.push_back(slam::selection_metrics(s.a0, sel));
          }
          const auto sum = slam::summarize(recs);
          out << "K" << *k << "_N" << n << "_noise" << noise << "," << *algo << ","
              << sum.mean_tpr << "," << sum.mean_one_minus_fdr << ","
              << sum.mean_support << "\n";
          std::cout << "K" << *k << " N" << n << " noise " << noise << ": TPR "
                    << sum.mean_tpr << ", 1-FDR " << sum.mean_one_minus_fdr << "\n";
        }
      out.close();
      write_manifest(m, fs::path(*out_path).parent_path().empty()
                            ? "."
                            : fs::path(*out_path).parent_path().string());
    });
  }

  // ---- pipeline ----
  {
    auto* cmd = app.add_subcommand(
        "pipeline", "Screen (when needed), fit a solution path, select, analyze");
    auto responses = std::make_shared<std::string>();
    auto qpath = std::make_shared<std::string>();
    auto truth = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>(".");
    auto algo = std::make_shared<std::string>("pem");
    auto model = std::make_shared<std::string>("two-param");
    auto threshold_k = std::make_shared<int>(12);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto enhance = std::make_shared<int>(0);
    cmd->add_option("--responses", *responses, "Response CSV")->required();
    cmd->add_option("--q", *qpath, "Q-matrix CSV")->required();
    cmd->add_option("--truth", *truth, "Optional truth JSON for accuracy metrics");
    cmd->add_option("--algo", *algo, "pem, fpvem, or em")->capture_default_str();
    cmd->add_option("--model", *model, "two-param or all-effect")->capture_default_str();
    cmd->add_option("--screen-threshold-k", *threshold_k,
                    "Enumerate {0,1}^K when K is at most this")->capture_default_str();
    cmd->add_option("--enhance-period", *enhance, "Screening snapshot period (0 = off)")->capture_default_str();
    cmd->add_option("--seed", *seed, "RNG seed")->capture_default_str();
    cmd->add_option("--out-dir", *out_dir, "Output directory")->capture_default_str();
    cmd->callback([=]() {
      ManifestInfo m;
      m.command = "pipeline";
      m.seed = *seed;
      m.config = {{"responses", *responses}, {"q", *qpath}, {"truth", *truth},
                  {"algo", *algo}, {"model", *model},
                  {"screen_threshold_k", *threshold_k},
                  {"enhance_period", *enhance}, {"out_dir", *out_dir}};
      note_input(m, *responses);
      note_input(m, *qpath);
      if (!truth->empty()) note_input(m, *truth);
      fs::create_directories(*out_dir);
      const auto r = load_responses(*responses);
      const auto q = slam::load_q_matrix(*qpath);

      slam::PatternSet a_input(q.K());
      const bool screened = q.K() > *threshold_k;
      m.config["screening_engaged"] = screened;
      if (screened) {
        slam::ScreenConfig sc;
        sc.seed = *seed;
        if (*enhance > 0) sc.enhance_period = *enhance;
        const auto res = slam::gibbs_screen(r, q, sc);
        a_input = res.a_screen;
        slam::save_pattern_set(
            (fs::path(*out_dir) / "screened_patterns.txt").string(), a_input);
      } else {
        a_input = slam::PatternSet::full(q.K());
      }

      slam::FitConfig cfg;
      apply_algo_flag(cfg, *algo, *model);
      const auto grid = parse_grid("", cfg.algo);
      const auto path = slam::solution_path(r, q, a_input, grid, cfg);
      const auto& best = path.best();
      slam::save_pattern_set((fs::path(*out_dir) / "selected_patterns.txt").string(),
                             best.selected);
      json summary;
      summary["screening_engaged"] = screened;
      summary["candidate_count"] = a_input.size();
      summary["path"] = path_to_json(path);
      if (!best.selected.empty())
        summary["hierarchy"] = hierarchy_to_json(slam::extract_hierarchy(best.selected));
      if (!truth->empty()) {
        std::ifstream tin(*truth);
        json tj;
        tin >> tj;
        slam::PatternSet a0(q.K());
        for (const auto& s : tj["a0"])
          a0.add(slam::AttributePattern::from_string(s.get<std::string>()));
        const auto rec = slam::selection_metrics(a0, best.selected);
        summary["metrics"] = {{"tpr", rec.tpr},
                              {"one_minus_fdr", rec.one_minus_fdr},
                              {"support_size", rec.support_size}};
      }
      write_json((fs::path(*out_dir) / "pipeline.json").string(), summary);
      write_manifest(m, *out_dir);
      std::cout << "selected " << best.selected.size() << " patterns"
                << (screened ? " (screening engaged)" : "") << "\n";
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
