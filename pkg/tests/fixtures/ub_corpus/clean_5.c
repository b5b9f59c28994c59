int u[3];
int main() {
  u[2] = 4;
  u[0] = u[2] - 1;
  printf("%d\n", u[0]);
  return 0;
}
