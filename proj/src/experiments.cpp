#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "esdlab/error.hpp"
#include "esdlab/harness.hpp"
#include "esdlab/numerics.hpp"

namespace esdlab {

std::uint64_t stream_index(std::size_t n, std::size_t trial, unsigned role) {
  return (static_cast<std::uint64_t>(n) << 32) + (static_cast<std::uint64_t>(trial) << 2) + (role & 3u);
}

bool ExperimentResult::all_passed() const {
  return numerical_failures == 0 &&
         std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Runs f(0..count-1) on up to `threads` workers. Each index is handled by
// exactly one call, so results written by index do not depend on scheduling.
template <class F>
void for_each_index(std::size_t count, unsigned threads, F&& f) {
  const unsigned workers = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(threads, count)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        f(k);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

std::string fmt(cplx z) {
  std::ostringstream s;
  s.precision(6);
  s << z.real();
  if (z.imag() != 0.0) s << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
  return s.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::size_t required_count(double fraction, std::size_t trials) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(trials) - 1e-9));
}

struct Operands {
  ComplexMatrix m;
  std::optional<ComplexMatrix> profile;
  std::optional<ComplexMatrix> left;
  std::optional<ComplexMatrix> right;
};

// Base matrix from role 2; profile and sandwich factors from successive
// draws of the role-3 stream.
Operands build_operands(const ExperimentConfig& c, std::size_t n, std::size_t trial) {
  Operands o{build_base_matrix(c.base, n, RngStream(c.master_seed, stream_index(n, trial, 2))), {}, {}, {}};
  RngStream aux(c.master_seed, stream_index(n, trial, 3));
  const auto profile_rng = RngStream::from_state(aux.next_u64());
  const auto left_rng = RngStream::from_state(aux.next_u64());
  const auto right_rng = RngStream::from_state(aux.next_u64());
  if (c.mode == AssemblyMode::hadamard_profile) o.profile = build_profile(c.profile, n, profile_rng);
  if (c.mode == AssemblyMode::sandwich) {
    o.left = build_base_matrix(c.left, n, left_rng);
    o.right = build_base_matrix(c.right, n, right_rng);
  }
  return o;
}

ComplexMatrix assemble_with(const ExperimentConfig& c, const Operands& o, const ComplexMatrix& x) {
  AssemblyOperands ops;
  if (o.left) ops.left = &*o.left;
  if (o.right) ops.right = &*o.right;
  if (o.profile) ops.profile = &*o.profile;
  return assemble(o.m, x, c.mode, ops);
}

ComplexMatrix draw(const ExperimentConfig& c, const ScalarDistribution& d, std::size_t n, std::size_t trial,
                   unsigned role) {
  RngStream rng(c.master_seed, stream_index(n, trial, role));
  return build_iid_matrix(n, d, rng);
}

// c when M / sqrt(n) = c I, else 0.
cplx scalar_center(const ComplexMatrix& m) {
  const std::size_t n = m.rows();
  const cplx d = m(0, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (m(i, j) != (i == j ? d : cplx{})) return 0.0;
    }
  }
  return d / std::sqrt(static_cast<double>(n));
}

TrialRecord make_record(const ExperimentConfig& c, std::size_t n, std::size_t trial) {
  return {to_string(c.experiment), n, trial, stream_index(n, trial, 0), {}};
}

bool is_kernel_failure(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const NumericalFailure&) {
    return true;
  } catch (const DegenerateError&) {
    return true;
  } catch (const SingularityError&) {
    return true;
  } catch (...) {
    return false;
  }
}

struct TrialSlot {
  TrialRecord record;
  double runtime_ms = 0.0;
  bool failed = false;
  std::optional<EmpiricalMeasure2D> figure;
  cplx center;
  std::vector<FieldRow> field;
};

// Runs body(slot) for every (n, trial) pair and folds the slots into
// `result` in (n, trial) order. Kernel failures mark the trial, other
// exceptions propagate.
template <class Body>
std::vector<TrialSlot> run_trials(const ExperimentConfig& c, const RunOptions& options, ExperimentResult& result,
                                  Body&& body) {
  std::vector<TrialSlot> slots(c.n_list.size() * c.trials);
  for_each_index(slots.size(), options.threads, [&](std::size_t k) {
    const std::size_t n = c.n_list[k / c.trials];
    const std::size_t trial = k % c.trials;
    auto& slot = slots[k];
    slot.record = make_record(c, n, trial);
    const auto start = Clock::now();
    try {
      body(slot, n, trial);
    } catch (...) {
      if (!is_kernel_failure(std::current_exception())) throw;
      slot.failed = true;
      slot.record.add("numerical_failure", 1.0);
    }
    slot.runtime_ms = elapsed_ms(start);
  });
  for (const auto& s : slots) {
    result.records.push_back(s.record);
    auto t = make_record(c, s.record.n, s.record.trial);
    t.add("runtime_ms", s.runtime_ms);
    result.timings.push_back(std::move(t));
    if (s.failed) ++result.numerical_failures;
  }
  return slots;
}

std::filesystem::path out_dir(const ExperimentConfig& c) { return c.output_dir; }

void write_common(const ExperimentConfig& c, ExperimentResult& result) {
  const auto dir = out_dir(c);
  write_trials_csv(result.records, dir / "trials.csv");
  result.artifacts.insert(result.artifacts.begin(), dir / "trials.csv");
  write_trials_csv(result.timings, dir / "timings.csv");
  result.artifacts.push_back(dir / "timings.csv");
  write_manifest(c, result, dir);
}

bool wants_figure(const ExperimentConfig& c, std::size_t trial) {
  return c.figures == "all" || (c.figures == "first" && trial == 0);
}

}  // namespace

ExperimentResult run_circular_law(const ExperimentConfig& c, const RunOptions& options) {
  c.validate();
  const auto th = c.effective_thresholds();
  ExperimentResult result;
  auto slots = run_trials(c, options, result, [&](TrialSlot& slot, std::size_t n, std::size_t trial) {
    const auto ops = build_operands(c, n, trial);
    const auto a = assemble_with(c, ops, draw(c, c.distribution_x, n, trial, 0));
    const auto mu = esd_eigen(a);
    const cplx center = scalar_center(ops.m);
    const auto ks = radial_angular_ks(mu, circular_radial_cdf, center);
    slot.record.add("radial_ks", ks.radial);
    slot.record.add("angular_ks", ks.angular);
    slot.record.add("in_disk_fraction", fraction_within(mu, center, th.at("in_disk_radius")));
    slot.record.add("second_moment", second_moment(mu));
    slot.center = center;
    if (wants_figure(c, trial)) slot.figure = mu;
  });

  for (std::size_t i = 0; i < c.n_list.size(); ++i) {
    const std::size_t n = c.n_list[i];
    std::size_t ks_ok = 0, disk_ok = 0;
    for (std::size_t t = 0; t < c.trials; ++t) {
      const auto& s = slots[i * c.trials + t];
      if (s.failed) continue;
      if (s.record.get("radial_ks") < th.at("radial_ks") && s.record.get("angular_ks") < th.at("angular_ks")) ++ks_ok;
      if (s.record.get("in_disk_fraction") >= th.at("in_disk_fraction")) ++disk_ok;
    }
    const auto need = required_count(th.at("ks_pass_fraction"), c.trials);
    result.assertions.push_back({"circular n=" + std::to_string(n) + ": radial and angular KS below thresholds",
                                 ks_ok >= need,
                                 std::to_string(ks_ok) + "/" + std::to_string(c.trials) + " trials (need " +
                                     std::to_string(need) + ")"});
    result.assertions.push_back({"circular n=" + std::to_string(n) + ": in-disk fraction in every trial",
                                 disk_ok == c.trials,
                                 std::to_string(disk_ok) + "/" + std::to_string(c.trials) + " trials"});
  }

  if (options.write_outputs) {
    for (const auto& s : slots) {
      if (!s.figure) continue;
      const auto path =
          out_dir(c) / ("scatter_n" + std::to_string(s.record.n) + "_t" + std::to_string(s.record.trial) + ".svg");
      write_scatter_svg(*s.figure, s.center, path);
      result.artifacts.push_back(path);
    }
    write_common(c, result);
  }
  return result;
}

ExperimentResult run_universality(const ExperimentConfig& c, const RunOptions& options) {
  c.validate();
  const auto th = c.effective_thresholds();
  const TestFunctionDictionary dict;
  ExperimentResult result;
  auto slots = run_trials(c, options, result, [&](TrialSlot& slot, std::size_t n, std::size_t trial) {
    const auto ops = build_operands(c, n, trial);
    const auto a = assemble_with(c, ops, draw(c, c.distribution_x, n, trial, 0));
    const auto b = assemble_with(c, ops, draw(c, c.distribution_y, n, trial, c.shared_stream ? 0 : 1));
    slot.record.add("bl_distance", bl_distance(esd_eigen(a), esd_eigen(b), dict));
    slot.record.add("dilation_ks", ks_distance(dilation_esd(a), dilation_esd(b)));
  });

  std::vector<double> med_bl, med_ks;
  for (std::size_t i = 0; i < c.n_list.size(); ++i) {
    std::vector<double> bl, ks;
    for (std::size_t t = 0; t < c.trials; ++t) {
      const auto& s = slots[i * c.trials + t];
      if (s.failed) continue;
      bl.push_back(s.record.get("bl_distance"));
      ks.push_back(s.record.get("dilation_ks"));
    }
    med_bl.push_back(median(bl));
    med_ks.push_back(median(ks));
  }

  std::ostringstream trend;
  for (std::size_t i = 0; i < med_bl.size(); ++i) trend << (i ? ", " : "") << fmt(med_bl[i]);
  if (th.at("require_decreasing") != 0.0 && c.n_list.size() > 1) {
    bool decreasing = true;
    for (std::size_t i = 1; i < med_bl.size(); ++i) decreasing = decreasing && med_bl[i] < med_bl[i - 1];
    result.assertions.push_back({"universality: median bl_distance strictly decreasing in n", decreasing,
                                 "medians " + trend.str()});
  }
  const double last = med_bl.back();
  result.assertions.push_back({"universality: median bl_distance at n=" + std::to_string(c.n_list.back()) + " < " +
                                   fmt(th.at("bl_distance")),
                               last < th.at("bl_distance"), "median " + fmt(last)});

  if (options.write_outputs) {
    const auto path = out_dir(c) / "trend.csv";
    std::vector<TrialRecord> rows;
    for (std::size_t i = 0; i < c.n_list.size(); ++i) {
      TrialRecord r{to_string(c.experiment), c.n_list[i], 0, 0, {}};
      r.add("median_bl_distance", med_bl[i]);
      r.add("median_dilation_ks", med_ks[i]);
      rows.push_back(std::move(r));
    }
    write_trials_csv(rows, path);
    result.artifacts.push_back(path);
    write_common(c, result);
  }
  return result;
}

ExperimentResult run_hermitization_check(const ExperimentConfig& c, const RunOptions& options) {
  c.validate();
  const auto th = c.effective_thresholds();
  std::vector<cplx> zs = c.z_list;
  if (c.lattice) {
    const auto pts = c.lattice->points();
    zs.insert(zs.end(), pts.begin(), pts.end());
  }
  ExperimentResult result;
  auto slots = run_trials(c, options, result, [&](TrialSlot& slot, std::size_t n, std::size_t trial) {
    const auto ops = build_operands(c, n, trial);
    const auto a = assemble_with(c, ops, draw(c, c.distribution_x, n, trial, 0));
    const double eps = std::pow(static_cast<double>(n), -c.regularization_exponent);
    const cplx center = scalar_center(ops.m);
    for (std::size_t k = 0; k < zs.size(); ++k) {
      const cplx z = zs[k];
      const auto v = shifted_log_det(a, z, eps);
      const double ref =
          c.reference == ReferenceLaw::circular ? circular_log_potential(z - center) : ds_log_potential(ops.m, z);
      slot.field.push_back({z, v.value, v.regularized, ref});
      const std::string tag = "@" + std::to_string(k);
      if (v.value.is_minus_infinity()) {
        slot.record.add("singular" + tag, 1.0);
        continue;
      }
      slot.record.add("f_n" + tag, v.value.value());
      slot.record.add("f_reg" + tag, v.regularized);
      slot.record.add("reference" + tag, ref);
      slot.record.add("potential_gap" + tag, std::abs(v.value.value() - ref));
      slot.record.add("regularization_gap" + tag, std::abs(v.regularized - v.value.value()));
    }
    if (c.reference == ReferenceLaw::circular || !c.uv_list.empty()) {
      const auto mu = esd_eigen(a);
      if (c.reference == ReferenceLaw::circular) {
        const auto ks = radial_angular_ks(mu, circular_radial_cdf, center);
        slot.record.add("radial_ks", ks.radial);
        slot.record.add("angular_ks", ks.angular);
      }
      for (std::size_t k = 0; k < c.uv_list.size(); ++k) {
        const auto [u, v] = c.uv_list[k];
        const cplx g = girko_reconstruct(mu, u, v);
        slot.record.add("girko_error@" + std::to_string(k), std::abs(g - characteristic_function(mu, u, v)));
      }
    }
  });

  for (std::size_t i = 0; i < c.n_list.size(); ++i) {
    const std::size_t n = c.n_list[i];
    const auto need = required_count(th.at("pass_fraction"), c.trials);
    for (std::size_t k = 0; k < c.z_list.size(); ++k) {
      const std::string tag = "@" + std::to_string(k);
      std::size_t pot_ok = 0, reg_ok = 0;
      double worst_pot = 0.0, worst_reg = 0.0;
      for (std::size_t t = 0; t < c.trials; ++t) {
        const auto& s = slots[i * c.trials + t];
        if (s.failed) continue;
        try {
          const double p = s.record.get("potential_gap" + tag);
          const double r = s.record.get("regularization_gap" + tag);
          worst_pot = std::max(worst_pot, p);
          worst_reg = std::max(worst_reg, r);
          pot_ok += p < th.at("potential_gap");
          reg_ok += r < th.at("regularization_gap");
        } catch (const std::out_of_range&) {
          // Singular shift: flagged in the record, excluded here.
        }
      }
      const std::string where = "hermitize n=" + std::to_string(n) + " z=" + fmt(c.z_list[k]);
      result.assertions.push_back({where + ": |f_n - reference| < " + fmt(th.at("potential_gap")), pot_ok >= need,
                                   std::to_string(pot_ok) + "/" + std::to_string(c.trials) + " trials, worst " +
                                       fmt(worst_pot)});
      result.assertions.push_back({where + ": |f_reg - f_n| < " + fmt(th.at("regularization_gap")), reg_ok >= need,
                                   std::to_string(reg_ok) + "/" + std::to_string(c.trials) + " trials, worst " +
                                       fmt(worst_reg)});
    }
    for (std::size_t k = 0; k < c.uv_list.size(); ++k) {
      double worst = 0.0;
      for (std::size_t t = 0; t < c.trials; ++t) {
        const auto& s = slots[i * c.trials + t];
        if (!s.failed) worst = std::max(worst, s.record.get("girko_error@" + std::to_string(k)));
      }
      result.assertions.push_back({"hermitize n=" + std::to_string(n) + " Girko (u,v)=(" + fmt(c.uv_list[k].first) +
                                       "," + fmt(c.uv_list[k].second) + ")",
                                   worst < th.at("girko_error"), "worst " + fmt(worst)});
    }
  }

  if (options.write_outputs) {
    for (const auto& s : slots) {
      const auto path =
          out_dir(c) / ("field_n" + std::to_string(s.record.n) + "_t" + std::to_string(s.record.trial) + ".csv");
      write_field_csv(s.field, path);
      result.artifacts.push_back(path);
    }
    write_common(c, result);
  }
  return result;
}

ExperimentResult run_ds_solve(const ExperimentConfig& c, const RunOptions& options) {
  c.validate();
  const auto th = c.effective_thresholds();
  ExperimentResult result;
  const MeasureH h{c.ds.h_atoms, c.ds.h_weights};
  DsOptions opt;
  opt.damping = c.ds.damping;
  opt.max_iterations = c.ds.max_iterations;
  opt.tolerance = c.ds.tolerance;

  std::vector<double> grid(c.ds.x_points);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = c.ds.x_min + (c.ds.x_max - c.ds.x_min) * static_cast<double>(i) / static_cast<double>(grid.size() - 1);
  }
  InversionOptions inv;
  inv.eta_schedule = c.ds.eta_schedule;
  inv.check_window = c.ds.check_window;

  TrialRecord summary{to_string(c.experiment), 0, 0, 0, {}};
  const auto start = Clock::now();
  std::optional<StieltjesSolution> solution;
  try {
    solution = invert_stieltjes([&](cplx w) { return solve_ds(h, c.ds.c, w, opt).m; }, grid, inv);
  } catch (const NumericalFailure& e) {
    ++result.numerical_failures;
    summary.add("numerical_failure", 1.0);
    summary.add("last_residual", e.last_residual());
    result.assertions.push_back({"ds-solve: Stieltjes inversion converged", false, e.what()});
  }

  const bool mp_case = c.ds.c == 1.0 && std::all_of(h.atoms.begin(), h.atoms.end(), [](double t) { return t == 0.0; });
  if (solution) {
    const double mass = total_mass(*solution);
    const double min_density = *std::min_element(solution->density.begin(), solution->density.end());
    summary.add("total_mass", mass);
    summary.add("min_density", min_density);
    for (std::size_t k = 0; k < solution->level_changes.size(); ++k) {
      summary.add("level_change@" + std::to_string(k), solution->level_changes[k]);
    }
    result.assertions.push_back({"ds-solve: Stieltjes inversion converged", true,
                                 "last level change " + fmt(solution->level_changes.empty()
                                                                ? 0.0
                                                                : solution->level_changes.back())});
    result.assertions.push_back({"ds-solve: recovered density nonnegative", min_density >= 0.0, fmt(min_density)});

    // Uniqueness probe on a coarse subset of the final level (reported only).
    if (c.ds.probe_uniqueness) {
      DsOptions probe = opt;
      probe.probe_uniqueness = true;
      double extra = 0.0;
      const std::size_t stride = std::max<std::size_t>(1, grid.size() / 20);
      for (std::size_t i = 0; i < grid.size(); i += stride) {
        try {
          extra += static_cast<double>(solve_ds(h, c.ds.c, cplx(grid[i], solution->eta), probe).other_fixed_points.size());
        } catch (const NumericalFailure&) {
        }
      }
      summary.add("extra_fixed_points", extra);
    }

    if (mp_case) {
      const auto points = static_cast<std::size_t>(th.at("oracle_points"));
      double worst = 0.0;
      for (std::size_t k = 0; k < points; ++k) {
        const double x = c.ds.x_min + (c.ds.x_max - c.ds.x_min) * (static_cast<double>(k) + 0.5) / static_cast<double>(points);
        const cplx w(x, th.at("oracle_eta"));
        worst = std::max(worst, std::abs(solve_ds(h, 1.0, w, opt).m - mp_reference(w)));
      }
      summary.add("oracle_max_error", worst);
      result.assertions.push_back({"ds-solve: solver vs quadratic root on " + std::to_string(points) + " points",
                                   worst < th.at("oracle_error"), "max error " + fmt(worst)});

      double sup = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] >= th.at("density_window_lo") && grid[i] <= th.at("density_window_hi")) {
          sup = std::max(sup, std::abs(solution->density[i] - mp_density(grid[i])));
        }
      }
      summary.add("density_sup_error", sup);
      result.assertions.push_back({"ds-solve: density vs closed form on [" + fmt(th.at("density_window_lo")) + ", " +
                                       fmt(th.at("density_window_hi")) + "]",
                                   sup < th.at("density_error"), "sup error " + fmt(sup)});
      result.assertions.push_back({"ds-solve: total mass within " + fmt(th.at("mass_tolerance")) + " of 1",
                                   std::abs(mass - 1.0) <= th.at("mass_tolerance"), "mass " + fmt(mass)});
    }
  }
  result.records.push_back(summary);
  TrialRecord timing{to_string(c.experiment), 0, 0, 0, {}};
  timing.add("runtime_ms", elapsed_ms(start));
  result.timings.push_back(timing);

  // Monte Carlo comparison of Gram spectra against the recovered law.
  if (solution && mp_case) {
    const auto cdf = recovered_cdf(*solution);
    std::vector<TrialSlot> slots = run_trials(c, options, result, [&](TrialSlot& slot, std::size_t n, std::size_t trial) {
      const auto ops = build_operands(c, n, trial);
      const auto a = assemble_with(c, ops, draw(c, c.distribution_x, n, trial, 0));
      const auto gram = esd_gram(a, 0.0);
      slot.record.add("gram_ks", ks_statistic(gram.atoms, cdf));
    });
    double worst = 0.0;
    bool ok = true;
    for (const auto& s : slots) {
      if (s.failed) {
        ok = false;
        continue;
      }
      worst = std::max(worst, s.record.get("gram_ks"));
    }
    result.assertions.push_back({"ds-solve: Gram ESD KS vs recovered CDF < " + fmt(th.at("gram_ks")),
                                 ok && worst < th.at("gram_ks"), "worst " + fmt(worst)});
  }

  if (options.write_outputs) {
    if (solution) {
      const auto path = out_dir(c) / "ds.csv";
      write_ds_csv(*solution, path);
      result.artifacts.push_back(path);
    }
    write_common(c, result);
  }
  return result;
}

ExperimentResult run_tail_suite(const ExperimentConfig& c, const RunOptions& options) {
  c.validate();
  const auto th = c.effective_thresholds();
  ExperimentResult result;

  // (a), (b): extreme singular values and the intermediate ratio.
  auto slots = run_trials(c, options, result, [&](TrialSlot& slot, std::size_t n, std::size_t trial) {
    const auto ops = build_operands(c, n, trial);
    const auto a = assemble_with(c, ops, draw(c, c.distribution_x, n, trial, 0));
    const auto sv = singular_values(a).values;
    slot.record.add("sigma_min", sv.back());
    slot.record.add("sigma_max", sv.front());
    const double nd = static_cast<double>(n);
    const std::vector<std::pair<std::string, std::size_t>> picks{
        {"ratio@n^0.99", static_cast<std::size_t>(std::floor(std::pow(nd, 0.99)))},
        {"ratio@n/10", n / 10},
        {"ratio@n/4", n / 4}};
    for (const auto& [name, i] : picks) {
      if (i == 0 || i >= n) continue;
      // sigma_{n-i}(A / sqrt n) n / i, singular values indexed from 1.
      slot.record.add(name, sv[n - i - 1] / std::sqrt(nd) * nd / static_cast<double>(i));
    }
  });

  for (std::size_t k = 0; k < c.n_list.size(); ++k) {
    const std::size_t n = c.n_list[k];
    const double nd = static_cast<double>(n);
    double smin = kInf, smax = 0.0, rmin = kInf;
    bool ok = true;
    for (std::size_t t = 0; t < c.trials; ++t) {
      const auto& s = slots[k * c.trials + t];
      if (s.failed) {
        ok = false;
        continue;
      }
      smin = std::min(smin, s.record.get("sigma_min"));
      smax = std::max(smax, s.record.get("sigma_max"));
      for (const auto& [name, v] : s.record.metrics) {
        if (name.rfind("ratio@", 0) == 0) rmin = std::min(rmin, v);
      }
    }
    const double floor = std::pow(nd, -th.at("sigma_floor_exponent"));
    const double ceiling = std::pow(nd, th.at("sigma_ceiling_exponent"));
    const std::string where = "tails n=" + std::to_string(n);
    result.assertions.push_back({where + ": min sigma_n >= n^-" + fmt(th.at("sigma_floor_exponent")),
                                 ok && smin >= floor, "min sigma_n " + fmt(smin)});
    result.assertions.push_back({where + ": max sigma_1 <= n^" + fmt(th.at("sigma_ceiling_exponent")),
                                 ok && smax <= ceiling, "max sigma_1 " + fmt(smax)});
    result.assertions.push_back({where + ": min ratio sigma_{n-i}(A/sqrt n) n/i > " + fmt(th.at("ratio_floor")),
                                 ok && rmin > th.at("ratio_floor"), "empirical constant " + fmt(rmin)});
    TrialRecord summary{to_string(c.experiment), n, 0, 0, {}};
    summary.add("min_sigma_min", smin);
    summary.add("max_sigma_max", smax);
    summary.add("ratio_constant", rmin);
    result.records.push_back(std::move(summary));
  }

  // (c), (d): distance of a random row to a fixed random subspace.
  const std::size_t dn = c.tails.distance_n;
  const std::size_t dd = c.tails.distance_d;
  const auto start = Clock::now();
  OrthonormalRows w(dn);
  {
    RngStream rng(c.master_seed, stream_index(dn, 0, 3));
    std::vector<cplx> row(dn);
    for (std::size_t r = 0; r < dd; ++r) {
      for (auto& x : row) x = sample_scalar(c.distribution_x, rng);
      w.add(row);
    }
  }
  std::vector<double> dist(c.tails.distance_trials);
  for_each_index(dist.size(), options.threads, [&](std::size_t t) {
    RngStream rng(c.master_seed, stream_index(dn, t, 0));
    std::vector<cplx> row(dn);
    for (auto& x : row) x = sample_scalar(c.distribution_x, rng);
    dist[t] = w.distance(row);
  });
  const double codim = static_cast<double>(dn - w.size());
  double mean_sq = 0.0, dmin = kInf;
  for (std::size_t t = 0; t < dist.size(); ++t) {
    TrialRecord r{to_string(c.experiment), dn, t, stream_index(dn, t, 0), {}};
    r.add("distance", dist[t]);
    result.records.push_back(std::move(r));
    mean_sq += dist[t] * dist[t];
    dmin = std::min(dmin, dist[t]);
  }
  mean_sq /= static_cast<double>(dist.size());
  const double bound = th.at("distance_constant") * std::sqrt(codim);
  const double ratio = mean_sq / codim;
  const std::string where = "tails distance n=" + std::to_string(dn) + " d=" + std::to_string(dd);
  result.assertions.push_back({where + ": all dist >= " + fmt(th.at("distance_constant")) + " sqrt(n-d)",
                               dmin >= bound, "min " + fmt(dmin) + " vs " + fmt(bound)});
  result.assertions.push_back({where + ": mean dist^2/(n-d) within " + fmt(th.at("dist2_tolerance")) + " of 1",
                               std::abs(ratio - 1.0) <= th.at("dist2_tolerance"), "ratio " + fmt(ratio)});

  const double med = median(dist);
  double spread = 0.0;
  for (double d : dist) spread += (d - med) * (d - med);
  spread = std::sqrt(spread / static_cast<double>(dist.size()));
  TrialRecord summary{to_string(c.experiment), dn, 0, 0, {}};
  summary.add("subspace_dimension", static_cast<double>(w.size()));
  summary.add("min_distance", dmin);
  summary.add("mean_dist2_ratio", ratio);
  summary.add("spread_about_median", spread);
  bool within = true;
  std::ostringstream detail;
  const double scale = std::pow(static_cast<double>(dn), 0.1);
  for (double r : c.tails.talagrand_r) {
    const double beyond = static_cast<double>(std::count_if(dist.begin(), dist.end(), [&](double d) {
                            return std::abs(d - med) >= r * scale;
                          })) /
                          static_cast<double>(dist.size());
    const double envelope = 4.0 * std::exp(-r * r / 8.0);
    summary.add("talagrand_fraction@" + fmt(r), beyond);
    summary.add("talagrand_envelope@" + fmt(r), envelope);
    within = within && beyond <= envelope;
    if (detail.tellp() > 0) detail << "; ";
    detail << "r=" << fmt(r) << ": " << fmt(beyond) << " <= " << fmt(envelope);
  }
  result.records.push_back(std::move(summary));
  result.assertions.push_back({where + ": deviations beyond r n^0.1 within 4 exp(-r^2/8)", within, detail.str()});
  TrialRecord timing{to_string(c.experiment), dn, 0, 0, {}};
  timing.add("runtime_ms", elapsed_ms(start));
  result.timings.push_back(timing);

  if (options.write_outputs) write_common(c, result);
  return result;
}

namespace {

// log|det| by Gaussian elimination with partial pivoting; nullopt if a pivot
// vanishes exactly.
std::optional<double> lu_log_abs_det(const ComplexMatrix& a) {
  const std::size_t n = a.rows();
  std::vector<cplx> m(a.entries().begin(), a.entries().end());
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(m[i * n + k]) > std::abs(m[p * n + k])) p = i;
    }
    if (m[p * n + k] == cplx{}) return std::nullopt;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m[k * n + j], m[p * n + j]);
    }
    const cplx pivot = m[k * n + k];
    total += std::log(std::abs(pivot));
    for (std::size_t i = k + 1; i < n; ++i) {
      const cplx f = m[i * n + k] / pivot;
      for (std::size_t j = k; j < n; ++j) m[i * n + j] -= f * m[k * n + j];
    }
  }
  return total;
}

double relative_log_gap(double a, double b) { return std::abs(std::expm1(a - b)); }

}  // namespace

ExperimentResult run_lemma_suite(const ExperimentConfig& c, const RunOptions& options) {
  c.validate();
  const auto th = c.effective_thresholds();
  ExperimentResult result;
  const std::array<DistributionKind, 6> kinds{DistributionKind::real_gaussian,    DistributionKind::complex_gaussian,
                                              DistributionKind::bernoulli,        DistributionKind::uniform_centered,
                                              DistributionKind::two_point_asymmetric, DistributionKind::pareto_symmetrized};
  struct CaseOut {
    TrialRecord record;
    double a4 = 0.0, det = 0.0;
    std::size_t violations = 0;
    double runtime = 0.0;
  };
  std::vector<CaseOut> cases(c.lemmas.cases);
  for_each_index(cases.size(), options.threads, [&](std::size_t k) {
    const auto start = Clock::now();
    RngStream rng(c.master_seed, stream_index(0, k, 0));
    const std::size_t maxn = c.lemmas.max_size;
    std::size_t rows = 1 + rng.next_u64() % maxn;
    std::size_t cols = rows;
    if (k % 3 == 1) cols = rows + rng.next_u64() % (maxn - rows + 1);            // wide
    if (k % 3 == 2) cols = 1 + rng.next_u64() % std::max<std::size_t>(rows, 1);  // tall or square
    const auto dist = ScalarDistribution::of(kinds[(k / 3) % kinds.size()]);
    std::vector<cplx> entries(rows * cols);
    for (auto& e : entries) e = sample_scalar(dist, rng);
    const ComplexMatrix a(rows, cols, std::move(entries));

    auto& out = cases[k];
    out.record = {to_string(c.experiment), rows, k, stream_index(0, k, 0), {}};
    out.record.add("cols", static_cast<double>(cols));
    const auto sv = singular_values(a).values;
    const bool full_rank = sv.back() > 1e-10 * sv.front();

    if (full_rank) {
      // Tall matrices go through their adjoint, which has the same singular values.
      double s_sigma = 0.0, s_dist = 0.0;
      for (double s : sv) s_sigma += 1.0 / (s * s);
      for (double d : leave_one_out_distances(rows <= cols ? a : a.adjoint())) s_dist += 1.0 / (d * d);
      out.a4 = std::abs(s_sigma - s_dist) / s_sigma;
      out.record.add("a4_residual", out.a4);
    }
    if (rows == cols && full_rank) {
      const auto lu = lu_log_abs_det(a);
      const auto by_sigma = log_abs_det(a, LogDetMethod::via_singular);
      const auto by_dist = log_abs_det(a, LogDetMethod::via_distances);
      double by_eig = 0.0;
      for (const auto& l : eigenvalues(a).values) by_eig += std::log(std::abs(l));
      if (lu && !by_sigma.is_minus_infinity() && !by_dist.is_minus_infinity()) {
        out.det = std::max({relative_log_gap(by_sigma.value(), *lu), relative_log_gap(by_dist.value(), *lu),
                            relative_log_gap(by_eig, *lu)});
        out.record.add("det_residual", out.det);
      }
    }
    if (rows == cols && rows >= 2) {
      const auto drop = 1 + rng.next_u64() % (rows - 1);
      const auto il = verify_interlacing(a, drop);
      out.violations += il.violations;
      out.record.add("interlacing_worst", il.worst_violation);
    }
    if (rows == cols) {
      const auto wr = verify_weyl(a);
      out.violations += wr.second_moment.violations + wr.products.violations;
      out.record.add("weyl_second_moment_gap", wr.second_moment_gap);
      out.record.add("weyl_worst", std::max(wr.second_moment.worst_violation, wr.products.worst_violation));
    }
    out.record.add("violations", static_cast<double>(out.violations));
    out.runtime = elapsed_ms(start);
  });

  double worst_a4 = 0.0, worst_det = 0.0;
  std::size_t violations = 0;
  for (const auto& cs : cases) {
    result.records.push_back(cs.record);
    TrialRecord t{cs.record.experiment, cs.record.n, cs.record.trial, cs.record.seed, {}};
    t.add("runtime_ms", cs.runtime);
    result.timings.push_back(std::move(t));
    worst_a4 = std::max(worst_a4, cs.a4);
    worst_det = std::max(worst_det, cs.det);
    violations += cs.violations;
  }

  // Hand-built cases: a normal (circulant) matrix attains equality in the
  // Weyl second-moment bound, a nilpotent Jordan block is maximally strict.
  const std::size_t m = 6;
  std::vector<cplx> circ(m * m), jordan(m * m);
  const std::array<cplx, 6> first{cplx(1, 0.5), cplx(-0.3, 0), cplx(0.2, -1), cplx(0, 0), cplx(0.7, 0.1), cplx(-1, 0)};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) circ[i * m + j] = first[(j + m - i) % m];
    if (i + 1 < m) jordan[i * m + i + 1] = 1.0;
  }
  const auto normal = verify_weyl(ComplexMatrix(m, m, circ));
  const auto nilpotent = verify_weyl(ComplexMatrix(m, m, jordan));
  TrialRecord hand{to_string(c.experiment), m, c.lemmas.cases, 0, {}};
  hand.add("normal_second_moment_gap", normal.second_moment_gap);
  hand.add("nilpotent_second_moment_gap", nilpotent.second_moment_gap);
  result.records.push_back(hand);

  result.assertions.push_back({"lemmas: negative second moment identity, relative residual < " + fmt(th.at("a4_relative")),
                               worst_a4 < th.at("a4_relative"), "worst " + fmt(worst_a4)});
  result.assertions.push_back({"lemmas: |prod lambda| = prod sigma = prod dist = |det|, relative < " +
                                   fmt(th.at("det_relative")),
                               worst_det < th.at("det_relative"), "worst " + fmt(worst_det)});
  result.assertions.push_back({"lemmas: interlacing and Weyl inequalities", violations == 0,
                               std::to_string(violations) + " violations"});
  result.assertions.push_back({"lemmas: normal matrix attains Weyl second-moment equality",
                               normal.second_moment.passed() && normal.second_moment_gap < 1e-12,
                               "gap " + fmt(normal.second_moment_gap)});
  result.assertions.push_back({"lemmas: nilpotent matrix is strict in the Weyl bound",
                               nilpotent.second_moment.passed() && nilpotent.second_moment_gap > 0.5,
                               "gap " + fmt(nilpotent.second_moment_gap)});

  if (options.write_outputs) write_common(c, result);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  switch (config.experiment) {
    case ExperimentKind::circular: return run_circular_law(config, options);
    case ExperimentKind::universality: return run_universality(config, options);
    case ExperimentKind::hermitize: return run_hermitization_check(config, options);
    case ExperimentKind::ds_solve: return run_ds_solve(config, options);
    case ExperimentKind::tails: return run_tail_suite(config, options);
    case ExperimentKind::lemmas: return run_lemma_suite(config, options);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace esdlab
