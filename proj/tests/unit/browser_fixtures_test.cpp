#include <gtest/gtest.h>

#include <map>

#include "fixtures/browser_cases.h"

namespace {

void run_group(const std::string& group) {
  std::size_t n = 0;
  for (const fixture::Case& c : fixture::browser_cases()) {
    if (c.group != group) continue;
    ++n;
    EXPECT_TRUE(c.check()) << c.name;
  }
  EXPECT_GE(n, 5u);
}

TEST(BrowserFixtures, CookieMerge) { run_group("CookieMerge"); }
TEST(BrowserFixtures, AddCookie) { run_group("AddCookie"); }
TEST(BrowserFixtures, NavigableWindows) { run_group("NavigableWindows"); }
TEST(BrowserFixtures, Clean) { run_group("Clean"); }
TEST(BrowserFixtures, Redirect303Versus307) { run_group("Redirect"); }
TEST(BrowserFixtures, StrictTransportSecurity) { run_group("STS"); }
TEST(BrowserFixtures, CloseCorruptScrubbing) { run_group("CloseCorrupt"); }

TEST(BrowserFixtures, SevenGroups) {
  std::map<std::string, int> groups;
  for (const fixture::Case& c : fixture::browser_cases()) ++groups[c.group];
  EXPECT_EQ(groups.size(), 7u);
}

}  // namespace
