#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "ecgnet/error.hpp"

namespace ecgnet::train {

/// Halves the learning rate once `patience` consecutive epochs pass without a
/// new strict minimum of the validation loss, never going below `floor`. The
/// patience counter restarts after every reduction.
class PlateauSchedule {
public:
  PlateauSchedule(double initial_lr = 5e-4, std::size_t patience = 5, double floor = 1e-5, double factor = 0.5)
      : lr_(initial_lr), patience_(patience), floor_(floor), factor_(factor) {
    if (!(initial_lr > 0.0) || !(floor > 0.0) || patience == 0 || !(factor > 0.0 && factor < 1.0))
      throw ConfigError("invalid plateau schedule parameters");
    lr_ = std::max(lr_, floor_);
  }

  /// Feeds one epoch's validation loss; returns the rate for the next epoch.
  double update(double val_loss) {
    if (val_loss < best_) {
      best_ = val_loss;
      wait_ = 0;
    } else if (++wait_ >= patience_) {
      lr_ = std::max(lr_ * factor_, floor_);
      wait_ = 0;
    }
    return lr_;
  }

  double learning_rate() const { return lr_; }
  double best_loss() const { return best_; }
  std::size_t epochs_without_improvement() const { return wait_; }

private:
  double lr_;
  std::size_t patience_;
  double floor_;
  double factor_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t wait_ = 0;
};

/// Stateless form: replays `history` and returns `current_lr` halved (and
/// floored) if the last entry completes a plateau, unchanged otherwise.
inline double lr_plateau_update(const std::vector<double>& history, double current_lr, std::size_t patience = 5,
                                double floor = 1e-5) {
  if (history.empty()) throw ConfigError("learning-rate update needs a non-empty loss history");
  double best = std::numeric_limits<double>::infinity();
  std::size_t wait = 0;
  bool fired = false;
  for (double loss : history) {
    fired = false;
    if (loss < best) {
      best = loss;
      wait = 0;
    } else if (++wait >= patience) {
      fired = true;
      wait = 0;
    }
  }
  return fired ? std::max(current_lr * 0.5, floor) : current_lr;
}

/// 1-based epoch with the highest accuracy, earliest on ties; 0 when empty.
inline std::size_t select_best_epoch(const std::vector<double>& val_accuracy) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < val_accuracy.size(); ++i)
    if (best == 0 || val_accuracy[i] > val_accuracy[best - 1]) best = i + 1;
  return best;
}

} // namespace ecgnet::train
