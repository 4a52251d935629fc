#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "common.hpp"
#include "vecspec/errors.hpp"

// Exit codes: 0 success, 1 runtime failure, 2 configuration error.
int main(int argc, char** argv) {
  CLI::App app{"vecspec: specialize full word-vector vocabularies with lexical "
               "constraints, propagate to unseen words adversarially, and "
               "transfer the specialization across languages"};
  app.require_subcommand(1);
  app.allow_config_extras(false);
  app.set_config("--config", "", "Read options from a config file (flags override it)");

  cli::ArtifactTracker artifacts;
  cli::register_specialize(app, artifacts);
  cli::register_postspec_train(app, artifacts);
  cli::register_postspec_apply(app, artifacts);
  cli::register_auxgan_train(app, artifacts);
  cli::register_align(app, artifacts);
  cli::register_transfer(app, artifacts);
  cli::register_eval_sim(app, artifacts);
  cli::register_eval_ls(app, artifacts);
  cli::register_demo_synthetic(app, artifacts);

  try {
    app.parse(argc, argv);
    artifacts.keep_all();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help and friends
    }
    app.exit(e);
    artifacts.discard_all();
    return 2;
  } catch (const vecspec::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    artifacts.discard_all();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    artifacts.discard_all();
    return 1;
  }
}
