#include <atomic>
#include <csignal>
#include <iostream>
#include <string>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>

#include "prognos/errors.hpp"
#include "prognos/service.hpp"

int main(int argc, char** argv) {
  using namespace prognos;

  CLI::App app{"Prediction service for fitted progression models"};
  std::string models_path;
  ServerOptions options;
  app.add_option("--models", models_path, "Model manifest or single model JSON");
  app.add_option("--port", options.port, "Port (0 picks a free one)");
  app.add_option("--host", options.host, "Bind address");
  app.add_option("--ui-dir", options.ui_dir, "Static files served under /ui/");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::InvalidArgument);
  }

  // Signals are taken synchronously by a dedicated thread; SIGHUP reloads the models.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGHUP);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  PredictionService service;
  try {
    if (!models_path.empty()) service.reload(load_models(models_path));
    HttpServer server(service, options);
    const int port = server.bind();
    std::cout << "listening on " << options.host << ":" << port << std::endl;

    std::atomic<bool> stopped = false;
    std::thread watcher([&] {
      int sig = 0;
      while (sigwait(&signals, &sig) == 0) {
        if (sig == SIGHUP && !models_path.empty()) {
          try {
            service.reload(load_models(models_path));
            std::cerr << "models reloaded\n";
          } catch (const std::exception& e) {
            std::cerr << "reload failed, keeping current models: " << e.what() << "\n";
          }
          continue;
        }
        stopped = true;
        server.wait_until_ready();
        server.stop();
        return;
      }
    });
    server.listen();
    if (!stopped) pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  }
  return 0;
}
