static int u[] = {0, 0, 0, 0, 0, 1};
int main() {
  int d = u[6];
  printf("%d\n", d);
  return 0;
}
