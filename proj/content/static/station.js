// SPDX-License-Identifier: Apache-2.0
// Minimal placeholder; the full client lives in the frontend package.
(function () {
  var page = document.body.getAttribute('data-page') || 'unknown';
  var start = Date.now();
  function beacon() {
    var body = JSON.stringify({ page: page, ms: Date.now() - start });
    if (navigator.sendBeacon) navigator.sendBeacon('/api/timing', body);
  }
  window.addEventListener('pagehide', beacon);
})();
