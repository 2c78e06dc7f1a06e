#include <cstdio>

int main() {
  std::puts("purebox: CLI not wired yet");
  return 0;
}
