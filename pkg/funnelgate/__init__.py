# funnelgate package
